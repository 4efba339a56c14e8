#include "hcd/toml.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hcd::toml {
namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return {};
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

Table Table::parse_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config: " + path);
    std::stringstream buffer;
    buffer << is.rdbuf();
    return parse(buffer.str());
}

Table Table::parse(const std::string& text) {
    Table table;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        // comments start with '#' outside of strings
        bool in_string = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') in_string = !in_string;
            else if (line[i] == '#' && !in_string) {
                line.resize(i);
                break;
            }
        }
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::runtime_error("toml: malformed section at line " +
                                         std::to_string(lineno));
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("toml: expected key = value at line " +
                                     std::to_string(lineno));
        const std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw std::runtime_error("toml: empty key or value at line " +
                                     std::to_string(lineno));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
            value = value.substr(1, value.size() - 2);
        table.sections_[section][key] = value;
    }
    return table;
}

bool Table::has(const std::string& section, const std::string& key) const {
    const auto sec = sections_.find(section);
    return sec != sections_.end() && sec->second.count(key) > 0;
}

const std::string& Table::raw(const std::string& section, const std::string& key) const {
    const auto sec = sections_.find(section);
    if (sec == sections_.end())
        throw std::runtime_error("toml: missing section [" + section + "]");
    const auto it = sec->second.find(key);
    if (it == sec->second.end())
        throw std::runtime_error("toml: missing key '" + key + "' in [" + section + "]");
    return it->second;
}

std::string Table::get_string(const std::string& section, const std::string& key) const {
    return raw(section, key);
}

std::int64_t Table::get_int(const std::string& section, const std::string& key) const {
    const std::string& v = raw(section, key);
    std::size_t pos = 0;
    const std::int64_t out = std::stoll(v, &pos);
    if (pos != v.size())
        throw std::runtime_error("toml: '" + key + "' is not an integer");
    return out;
}

double Table::get_double(const std::string& section, const std::string& key) const {
    const std::string& v = raw(section, key);
    std::size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos != v.size())
        throw std::runtime_error("toml: '" + key + "' is not a number");
    return out;
}

bool Table::get_bool(const std::string& section, const std::string& key) const {
    const std::string& v = raw(section, key);
    if (v == "true") return true;
    if (v == "false") return false;
    throw std::runtime_error("toml: '" + key + "' is not a boolean");
}

std::string Table::get_string(const std::string& section, const std::string& key,
                              const std::string& fallback) const {
    return has(section, key) ? get_string(section, key) : fallback;
}

std::int64_t Table::get_int(const std::string& section, const std::string& key,
                            std::int64_t fallback) const {
    return has(section, key) ? get_int(section, key) : fallback;
}

double Table::get_double(const std::string& section, const std::string& key,
                         double fallback) const {
    return has(section, key) ? get_double(section, key) : fallback;
}

bool Table::get_bool(const std::string& section, const std::string& key, bool fallback) const {
    return has(section, key) ? get_bool(section, key) : fallback;
}

}  // namespace hcd::toml
