#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <string>

#include "gpilot/errors.hpp"
#include "gpilot/haar.hpp"
#include "gpilot/xml.hpp"

namespace gpilot::haar {

std::size_t Cascade::stump_count() const {
    std::size_t n = 0;
    for (const auto& s : stages) n += s.stumps.size();
    return n;
}

namespace {

[[noreturn]] void fail_at(const xml::Node& node, const std::string& msg) {
    throw ParseError(msg, node.line, node.column);
}

const xml::Node& require(const xml::Node& parent, std::string_view name) {
    if (const auto* c = parent.child(name)) return *c;
    fail_at(parent, "<" + parent.name + "> is missing <" + std::string(name) + ">");
}

std::vector<double> numbers(const xml::Node& node) {
    std::vector<double> out;
    const char* p = node.text.c_str();
    char* end = nullptr;
    for (;;) {
        while (*p == ' ' || *p == '\n' || *p == '\t' || *p == '\r') ++p;
        if (*p == '\0') break;
        errno = 0;
        const double v = std::strtod(p, &end);
        if (end == p || errno == ERANGE) fail_at(node, "<" + node.name + "> holds a malformed number");
        out.push_back(v);
        p = end;
    }
    return out;
}

double number(const xml::Node& node) {
    const auto v = numbers(node);
    if (v.size() != 1) fail_at(node, "<" + node.name + "> must hold exactly one number");
    return v[0];
}

int integer(const xml::Node& node) {
    const double v = number(node);
    if (v != static_cast<int>(v)) fail_at(node, "<" + node.name + "> must be an integer");
    return static_cast<int>(v);
}

HaarFeature parse_feature(const xml::Node& node, std::size_t index, int win_w, int win_h) {
    HaarFeature f;
    if (const auto* t = node.child("tilted")) f.tilted = integer(*t) != 0;
    if (f.tilted)
        throw UnsupportedFeatureError("feature " + std::to_string(index) + " (line " + std::to_string(node.line) +
                                      ") is tilted; tilted Haar features are not supported");
    const auto& rects = require(node, "rects");
    for (const auto& r : rects.children) {
        const auto v = numbers(r);
        if (v.size() != 5) fail_at(r, "feature rectangle must be 'x y w h weight'");
        WeightedRect wr{{static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2]), static_cast<int>(v[3])},
                        v[4]};
        if (wr.rect.x < 0 || wr.rect.y < 0 || wr.rect.width <= 0 || wr.rect.height <= 0 ||
            wr.rect.right() > win_w || wr.rect.bottom() > win_h)
            fail_at(r, "feature " + std::to_string(index) + " rectangle lies outside the base window");
        f.rects.push_back(wr);
    }
    if (f.rects.size() < 2 || f.rects.size() > 3)
        fail_at(rects, "feature " + std::to_string(index) + " must have 2 or 3 rectangles");
    return f;
}

Cascade parse_current(const xml::Node& root) {
    Cascade c;
    if (const auto* ft = root.child("featureType"); ft) {
        std::string type = ft->text;
        std::erase_if(type, [](char ch) { return std::isspace(static_cast<unsigned char>(ch)); });
        if (type != "HAAR") throw UnsupportedFeatureError("feature type '" + type + "' is not supported");
    }
    c.window_height = integer(require(root, "height"));
    c.window_width = integer(require(root, "width"));
    if (c.window_width <= 0 || c.window_height <= 0) fail_at(root, "base window must be positive");
    if (const auto* n = root.child("stageNum")) c.declared_stage_count = integer(*n);

    const auto& features = require(root, "features");
    for (const auto& f : features.children)
        c.features.push_back(parse_feature(f, c.features.size(), c.window_width, c.window_height));

    const auto& stages = require(root, "stages");
    for (const auto& s : stages.children) {
        CascadeStage stage;
        stage.threshold = number(require(s, "stageThreshold"));
        const auto& weak = require(s, "weakClassifiers");
        for (const auto& w : weak.children) {
            const auto& nodes_el = require(w, "internalNodes");
            const auto nodes = numbers(nodes_el);
            const auto leaves = numbers(require(w, "leafValues"));
            if (nodes.size() != 4 || leaves.size() != 2) {
                if (nodes.size() % 4 == 0 && nodes.size() > 4)
                    throw UnsupportedFeatureError("weak classifier at line " + std::to_string(w.line) +
                                                  " is a multi-node tree; only stumps are supported");
                fail_at(nodes_el, "stump must have 4 internal-node values and 2 leaf values");
            }
            Stump stump{static_cast<int>(nodes[2]), nodes[3], leaves[0], leaves[1]};
            if (stump.feature < 0 || static_cast<std::size_t>(stump.feature) >= c.features.size())
                fail_at(nodes_el, "feature index " + std::to_string(stump.feature) + " out of range");
            stage.stumps.push_back(stump);
        }
        if (stage.stumps.empty()) fail_at(s, "stage has no weak classifiers");
        c.stages.push_back(std::move(stage));
    }
    if (c.stages.empty()) fail_at(stages, "cascade has no stages");
    return c;
}

Cascade parse_legacy(const xml::Node& root) {
    Cascade c;
    const auto size = numbers(require(root, "size"));
    if (size.size() != 2 || size[0] <= 0 || size[1] <= 0) fail_at(root, "<size> must be 'width height'");
    c.window_width = static_cast<int>(size[0]);
    c.window_height = static_cast<int>(size[1]);

    const auto& stages = require(root, "stages");
    for (const auto& s : stages.children) {
        CascadeStage stage;
        stage.threshold = number(require(s, "stage_threshold"));
        for (const auto& tree : require(s, "trees").children) {
            if (tree.children.size() != 1)
                throw UnsupportedFeatureError("tree at line " + std::to_string(tree.line) +
                                              " has several nodes; only stumps are supported");
            const auto& node = tree.children.front();
            if (!node.child("left_val") || !node.child("right_val"))
                throw UnsupportedFeatureError("tree node at line " + std::to_string(node.line) +
                                              " has child nodes; only stumps are supported");
            const int index = static_cast<int>(c.features.size());
            c.features.push_back(parse_feature(require(node, "feature"), c.features.size(), c.window_width,
                                               c.window_height));
            stage.stumps.push_back({index, number(require(node, "threshold")), number(require(node, "left_val")),
                                    number(require(node, "right_val"))});
        }
        if (stage.stumps.empty()) fail_at(s, "stage has no trees");
        c.stages.push_back(std::move(stage));
    }
    if (c.stages.empty()) fail_at(stages, "cascade has no stages");
    return c;
}

}  // namespace

Cascade parse_cascade(std::string_view document) {
    const xml::Node doc = xml::parse(document);
    const xml::Node* root = &doc;
    if (doc.name == "opencv_storage") {
        if (doc.children.empty()) fail_at(doc, "empty <opencv_storage>");
        root = &doc.children.front();
    }
    if (root->child("stages") && root->child("size") && !root->child("features")) return parse_legacy(*root);
    return parse_current(*root);
}

Cascade load_cascade(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open cascade " + path.string());
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_cascade(text);
}

const Cascade& mini_face_cascade() {
    static const Cascade c = parse_cascade(mini_face_cascade_xml());
    return c;
}

}  // namespace gpilot::haar
