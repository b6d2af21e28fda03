#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "iag/core/errors.hpp"
#include "iag/core/types.hpp"

namespace iag {

// One JSON object per line, UTF-8.
template <typename T>
std::vector<T> read_jsonl(std::istream& in) {
    std::vector<T> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            out.push_back(json::parse(line).get<T>());
        } catch (const std::exception& e) {
            throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

template <typename T>
std::vector<T> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    return read_jsonl<T>(in);
}

template <typename T>
void write_jsonl(std::ostream& out, const std::vector<T>& records) {
    for (const auto& r : records) out << json(r).dump() << '\n';
}

template <typename T>
void write_jsonl(const std::filesystem::path& path, const std::vector<T>& records) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    write_jsonl(out, records);
}

}  // namespace iag
