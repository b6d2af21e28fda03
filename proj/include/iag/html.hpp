#pragma once

#include <string>
#include <string_view>

namespace iag {

// Visible text of an HTML page: the <body> when present, with script, style,
// noscript, template, nav, header, footer, aside and comments removed, tags
// stripped, common entities decoded and whitespace collapsed.
std::string html_to_text(std::string_view html);

std::string decode_entities(std::string_view text);

}  // namespace iag
