#pragma once

#include <fmt/format.h>

#include <initializer_list>
#include <string>
#include <string_view>
#include <utility>

namespace watson::detail {

struct Attr {
    std::string_view name;
    std::string value;
};

/// Fixed two-decimal formatting so output is byte-stable.
inline auto px(double v) -> std::string {
    auto s = fmt::format("{:.2f}", v);
    if (s == "-0.00") {
        s = "0.00";
    }
    return s;
}

inline auto xml_escape(std::string_view text) -> std::string {
    std::string out;
    out.reserve(text.size());
    for (const char ch : text) {
        switch (ch) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out.push_back(ch);
        }
    }
    return out;
}

/// Streaming SVG builder. Attributes are written in the order given.
class SvgWriter {
public:
    SvgWriter(int width, int height, std::string_view kind, std::string_view title) {
        out_ += R"(<?xml version="1.0" encoding="UTF-8"?>)";
        out_ += '\n';
        out_ += fmt::format(
            R"(<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{0}" height="{1}" viewBox="0 0 {0} {1}" class="watson-plot" data-kind="{2}" font-family="sans-serif" font-size="11">)",
            width, height, xml_escape(kind));
        out_ += '\n';
        element_with_text("title", {}, title);
        element("rect", {{"x", "0"}, {"y", "0"}, {"width", std::to_string(width)},
                         {"height", std::to_string(height)}, {"fill", "#ffffff"}});
    }

    void open(std::string_view tag, std::initializer_list<Attr> attrs) {
        start_tag(tag, attrs);
        out_ += ">\n";
        ++depth_;
    }

    void close(std::string_view tag) {
        --depth_;
        indent();
        out_ += fmt::format("</{}>\n", tag);
    }

    void element(std::string_view tag, std::initializer_list<Attr> attrs) {
        start_tag(tag, attrs);
        out_ += "/>\n";
    }

    void element_with_text(std::string_view tag, std::initializer_list<Attr> attrs,
                           std::string_view text) {
        start_tag(tag, attrs);
        out_ += '>';
        out_ += xml_escape(text);
        out_ += fmt::format("</{}>\n", tag);
    }

    void text(std::initializer_list<Attr> attrs, std::string_view content) {
        element_with_text("text", attrs, content);
    }

    [[nodiscard]] auto finish() && -> std::string {
        out_ += "</svg>\n";
        return std::move(out_);
    }

private:
    void indent() { out_.append(static_cast<std::size_t>(depth_ + 1) * 2, ' '); }

    void start_tag(std::string_view tag, std::initializer_list<Attr> attrs) {
        indent();
        out_ += '<';
        out_ += tag;
        for (const auto& a : attrs) {
            out_ += fmt::format(R"( {}="{}")", a.name, xml_escape(a.value));
        }
    }

    std::string out_;
    int depth_ = 0;
};

}  // namespace watson::detail
