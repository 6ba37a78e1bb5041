#pragma once

// Reads emitted SVG back through a real XML parser so structural checks never
// rely on the writer's own formatting.

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace svgcheck {

using Tree = boost::property_tree::ptree;

/// Throws boost::property_tree::xml_parser_error on malformed input.
inline auto parse(const std::string& xml) -> Tree {
    std::istringstream in(xml);
    Tree tree;
    boost::property_tree::read_xml(in, tree);
    return tree;
}

inline auto well_formed(const std::string& xml) -> bool {
    try {
        parse(xml);
        return true;
    } catch (const boost::property_tree::xml_parser_error&) {
        return false;
    }
}

struct Element {
    std::string tag;
    const Tree* node;

    [[nodiscard]] auto attr(const std::string& name) const -> std::optional<std::string> {
        if (auto a = node->get_child_optional("<xmlattr>." + name)) {
            return a->data();
        }
        return std::nullopt;
    }
    [[nodiscard]] auto num(const std::string& name) const -> double {
        return std::stod(attr(name).value_or("nan"));
    }
    [[nodiscard]] auto has_class(const std::string& cls) const -> bool {
        const auto c = attr("class");
        if (!c) {
            return false;
        }
        std::istringstream words(*c);
        std::string w;
        while (words >> w) {
            if (w == cls) {
                return true;
            }
        }
        return false;
    }
    [[nodiscard]] auto text() const -> std::string { return node->data(); }
};

inline void walk(const Tree& node, std::vector<Element>& out) {
    for (const auto& [tag, child] : node) {
        if (tag == "<xmlattr>" || tag == "<xmlcomment>") {
            continue;
        }
        out.push_back({tag, &child});
        walk(child, out);
    }
}

/// Every element in document order.
// Elements point into the tree, so it must outlive them.
auto elements(const Tree&& tree) -> std::vector<Element> = delete;

inline auto elements(const Tree& tree) -> std::vector<Element> {
    std::vector<Element> out;
    walk(tree, out);
    return out;
}

inline auto with_class(const std::vector<Element>& all, const std::string& cls)
    -> std::vector<Element> {
    std::vector<Element> out;
    for (const auto& e : all) {
        if (e.has_class(cls)) {
            out.push_back(e);
        }
    }
    return out;
}

/// Elements below `root` (exclusive) carrying `cls`.
inline auto within(const Element& root, const std::string& cls) -> std::vector<Element> {
    std::vector<Element> all;
    walk(*root.node, all);
    return with_class(all, cls);
}

inline auto texts(const std::vector<Element>& all) -> std::vector<std::string> {
    std::vector<std::string> out;
    for (const auto& e : all) {
        if (e.tag == "text") {
            out.push_back(e.text());
        }
    }
    return out;
}

}  // namespace svgcheck
