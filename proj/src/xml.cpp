#include "gpilot/xml.hpp"

#include <cctype>

#include "gpilot/errors.hpp"

namespace gpilot::xml {

const Node* Node::child(std::string_view child_name) const {
    for (const auto& c : children)
        if (c.name == child_name) return &c;
    return nullptr;
}

const std::string* Node::attribute(std::string_view attr_name) const {
    for (const auto& [k, v] : attributes)
        if (k == attr_name) return &v;
    return nullptr;
}

namespace {

class Parser {
public:
    explicit Parser(std::string_view doc) : doc_(doc) {}

    Node parse_document() {
        skip_misc();
        if (eof()) fail("document has no root element");
        if (peek() != '<') fail("unexpected character data before the root element");
        Node root = parse_element();
        skip_misc();
        if (!eof()) fail("unexpected content after the root element");
        return root;
    }

private:
    std::string_view doc_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line_, col_); }

    bool eof() const { return pos_ >= doc_.size(); }
    char peek(std::size_t ahead = 0) const { return pos_ + ahead < doc_.size() ? doc_[pos_ + ahead] : '\0'; }
    bool starts_with(std::string_view s) const { return doc_.substr(pos_, s.size()) == s; }

    char advance() {
        const char c = doc_[pos_++];
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return c;
    }
    void advance(std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) advance();
    }
    void expect(char c) {
        if (eof() || peek() != c) fail(std::string("expected '") + c + "'");
        advance();
    }
    void skip_ws() {
        while (!eof() && std::isspace(static_cast<unsigned char>(peek()))) advance();
    }
    void skip_until(std::string_view terminator, const char* what) {
        while (!eof() && !starts_with(terminator)) advance();
        if (eof()) fail(std::string("unterminated ") + what);
        advance(terminator.size());
    }

    // Whitespace, comments, processing instructions and DOCTYPE outside elements.
    void skip_misc() {
        for (;;) {
            skip_ws();
            if (starts_with("<?")) {
                skip_until("?>", "processing instruction");
            } else if (starts_with("<!--")) {
                skip_until("-->", "comment");
            } else if (starts_with("<!DOCTYPE")) {
                skip_until(">", "DOCTYPE");
            } else {
                return;
            }
        }
    }

    static bool is_name_char(char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.' || c == ':';
    }

    std::string parse_name() {
        const std::size_t start = pos_;
        if (eof() || !(std::isalpha(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == ':'))
            fail("expected a name");
        while (!eof() && is_name_char(peek())) advance();
        return std::string(doc_.substr(start, pos_ - start));
    }

    void append_entity(std::string& out) {
        expect('&');
        const std::size_t start = pos_;
        while (!eof() && peek() != ';' && pos_ - start < 12) advance();
        if (eof() || peek() != ';') fail("unterminated entity reference");
        const auto ent = doc_.substr(start, pos_ - start);
        advance();
        if (ent == "lt") out += '<';
        else if (ent == "gt") out += '>';
        else if (ent == "amp") out += '&';
        else if (ent == "quot") out += '"';
        else if (ent == "apos") out += '\'';
        else if (!ent.empty() && ent[0] == '#') {
            unsigned long code = 0;
            try {
                code = (ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X'))
                           ? std::stoul(std::string(ent.substr(2)), nullptr, 16)
                           : std::stoul(std::string(ent.substr(1)), nullptr, 10);
            } catch (const std::exception&) {
                fail("bad character reference");
            }
            if (code < 0x80) {
                out += static_cast<char>(code);
            } else if (code < 0x800) {
                out += static_cast<char>(0xC0 | (code >> 6));
                out += static_cast<char>(0x80 | (code & 0x3F));
            } else if (code < 0x10000) {
                out += static_cast<char>(0xE0 | (code >> 12));
                out += static_cast<char>(0x80 | ((code >> 6) & 0x3F));
                out += static_cast<char>(0x80 | (code & 0x3F));
            } else {
                out += static_cast<char>(0xF0 | (code >> 18));
                out += static_cast<char>(0x80 | ((code >> 12) & 0x3F));
                out += static_cast<char>(0x80 | ((code >> 6) & 0x3F));
                out += static_cast<char>(0x80 | (code & 0x3F));
            }
        } else {
            fail("unknown entity '&" + std::string(ent) + ";'");
        }
    }

    Node parse_element() {
        Node node;
        node.line = line_;
        node.column = col_;
        expect('<');
        node.name = parse_name();

        for (;;) {
            skip_ws();
            if (eof()) fail("unterminated start tag <" + node.name + ">");
            if (peek() == '/') {
                advance();
                expect('>');
                return node;
            }
            if (peek() == '>') {
                advance();
                break;
            }
            std::string key = parse_name();
            skip_ws();
            expect('=');
            skip_ws();
            if (eof() || (peek() != '"' && peek() != '\'')) fail("expected quoted attribute value");
            const char quote = advance();
            std::string value;
            while (!eof() && peek() != quote) {
                if (peek() == '<') fail("'<' in attribute value");
                if (peek() == '&') append_entity(value);
                else value += advance();
            }
            if (eof()) fail("unterminated attribute value");
            advance();
            node.attributes.emplace_back(std::move(key), std::move(value));
        }

        for (;;) {
            if (eof()) fail("missing end tag for <" + node.name + ">");
            if (starts_with("</")) {
                advance(2);
                const std::string closing = parse_name();
                if (closing != node.name)
                    fail("mismatched end tag </" + closing + ">, expected </" + node.name + ">");
                skip_ws();
                expect('>');
                return node;
            }
            if (starts_with("<!--")) {
                skip_until("-->", "comment");
            } else if (starts_with("<![CDATA[")) {
                advance(9);
                const std::size_t start = pos_;
                while (!eof() && !starts_with("]]>")) advance();
                if (eof()) fail("unterminated CDATA section");
                node.text.append(doc_.substr(start, pos_ - start));
                advance(3);
            } else if (starts_with("<?")) {
                skip_until("?>", "processing instruction");
            } else if (peek() == '<') {
                node.children.push_back(parse_element());
            } else if (peek() == '&') {
                append_entity(node.text);
            } else {
                node.text += advance();
            }
        }
    }
};

}  // namespace

Node parse(std::string_view document) { return Parser(document).parse_document(); }

}  // namespace gpilot::xml
