#include "iag/html.hpp"

#include <array>
#include <cctype>
#include <cstdint>

#include "iag/core/text.hpp"

namespace iag {

namespace {

constexpr std::array<std::string_view, 9> kDroppedElements = {
    "script", "style", "noscript", "template", "nav", "header", "footer", "aside", "svg"};

bool is_name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == ':';
}

// Tag name at html[pos] where html[pos] == '<'. Empty for comments/doctype.
std::string tag_name(std::string_view html, std::size_t pos, bool& closing) {
    std::size_t i = pos + 1;
    closing = i < html.size() && html[i] == '/';
    if (closing) ++i;
    std::size_t start = i;
    while (i < html.size() && is_name_char(html[i])) ++i;
    return to_lower(html.substr(start, i - start));
}

bool is_dropped(const std::string& name) {
    for (auto d : kDroppedElements) {
        if (name == d) return true;
    }
    return false;
}

bool is_block(const std::string& name) {
    static constexpr std::array<std::string_view, 18> kBlocks = {
        "p", "div", "br", "li", "ul", "ol", "h1", "h2", "h3", "h4", "h5", "h6",
        "tr", "td", "section", "article", "blockquote", "title"};
    for (auto b : kBlocks) {
        if (name == b) return true;
    }
    return false;
}

void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x110000) {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

}  // namespace

std::string decode_entities(std::string_view text) {
    static constexpr std::array<std::pair<std::string_view, std::string_view>, 10> kNamed = {{
        {"amp", "&"}, {"lt", "<"}, {"gt", ">"}, {"quot", "\""}, {"apos", "'"},
        {"nbsp", " "}, {"mdash", "\xE2\x80\x94"}, {"ndash", "\xE2\x80\x93"},
        {"hellip", "\xE2\x80\xA6"}, {"rsquo", "\xE2\x80\x99"}}};
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '&') {
            out += text[i];
            continue;
        }
        auto semi = text.find(';', i + 1);
        if (semi == std::string_view::npos || semi - i > 10) {
            out += '&';
            continue;
        }
        std::string_view name = text.substr(i + 1, semi - i - 1);
        bool done = false;
        if (!name.empty() && name[0] == '#') {
            std::uint32_t cp = 0;
            bool hex = name.size() > 1 && (name[1] == 'x' || name[1] == 'X');
            std::string_view digits = name.substr(hex ? 2 : 1);
            bool ok = !digits.empty();
            for (char c : digits) {
                int v = std::isdigit(static_cast<unsigned char>(c)) ? c - '0'
                        : hex && std::isxdigit(static_cast<unsigned char>(c))
                            ? std::tolower(static_cast<unsigned char>(c)) - 'a' + 10
                            : -1;
                if (v < 0) {
                    ok = false;
                    break;
                }
                cp = cp * (hex ? 16 : 10) + static_cast<std::uint32_t>(v);
                if (cp > 0x10FFFF) {
                    ok = false;
                    break;
                }
            }
            if (ok) {
                append_utf8(out, cp == 0xA0 ? 0x20 : cp);
                done = true;
            }
        } else {
            for (const auto& [n, v] : kNamed) {
                if (name == n) {
                    out += v;
                    done = true;
                    break;
                }
            }
        }
        if (done) {
            i = semi;
        } else {
            out += '&';
        }
    }
    return out;
}

std::string html_to_text(std::string_view html) {
    // Restrict to <body> when there is one.
    std::string lower = to_lower(html);
    if (auto body = lower.find("<body"); body != std::string::npos) {
        auto open_end = lower.find('>', body);
        auto close = lower.rfind("</body");
        if (open_end != std::string::npos) {
            std::size_t end = close != std::string::npos && close > open_end ? close : html.size();
            html = html.substr(open_end + 1, end - open_end - 1);
            lower = lower.substr(open_end + 1, end - open_end - 1);
        }
    }

    std::string text;
    std::size_t i = 0;
    while (i < html.size()) {
        if (html[i] != '<') {
            auto next = html.find('<', i);
            if (next == std::string_view::npos) next = html.size();
            text.append(html.substr(i, next - i));
            i = next;
            continue;
        }
        if (lower.compare(i, 4, "<!--") == 0) {
            auto end = lower.find("-->", i + 4);
            i = end == std::string::npos ? html.size() : end + 3;
            continue;
        }
        bool closing = false;
        std::string name = tag_name(html, i, closing);
        auto gt = html.find('>', i);
        if (gt == std::string_view::npos) break;
        bool self_closing = gt > i && html[gt - 1] == '/';
        if (!closing && !self_closing && is_dropped(name)) {
            std::string close = "</" + name;
            auto end = lower.find(close, gt + 1);
            if (end == std::string::npos) break;
            auto end_gt = lower.find('>', end);
            i = end_gt == std::string::npos ? html.size() : end_gt + 1;
            text += ' ';
            continue;
        }
        if (is_block(name)) text += ' ';
        i = gt + 1;
    }
    return collapse_whitespace(decode_entities(text));
}

}  // namespace iag
