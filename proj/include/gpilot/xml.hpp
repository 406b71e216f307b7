#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gpilot::xml {

/// Element node of a parsed document. Character data of an element is
/// concatenated into `text` (entities decoded, CDATA kept verbatim).
struct Node {
    std::string name;
    std::vector<std::pair<std::string, std::string>> attributes;
    std::vector<Node> children;
    std::string text;
    int line = 0;
    int column = 0;

    const Node* child(std::string_view child_name) const;
    const std::string* attribute(std::string_view attr_name) const;
};

/// Parses a complete document and returns its root element. Throws
/// ParseError with the 1-based line/column of the first problem.
Node parse(std::string_view document);

}  // namespace gpilot::xml
