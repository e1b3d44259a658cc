// Copyright 2026 The Octo Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "octo/common/kvconfig.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace octo {

namespace {
std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}
}  // namespace

KvConfig KvConfig::parse_string(const std::string& text) {
    KvConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
            value = value.substr(1, value.size() - 2);
        }
        if (!section.empty()) key = section + "." + key;
        cfg.values_[key] = value;
    }
    return cfg;
}

KvConfig KvConfig::parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str());
}

std::optional<std::string> KvConfig::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

std::string KvConfig::get_or(const std::string& key, const std::string& def) const {
    auto v = get(key);
    return v ? *v : def;
}

int64_t KvConfig::get_int(const std::string& key, int64_t def) const {
    auto v = get(key);
    if (!v) return def;
    return std::stoll(*v);
}

double KvConfig::get_double(const std::string& key, double def) const {
    auto v = get(key);
    if (!v) return def;
    return std::stod(*v);
}

bool KvConfig::get_bool(const std::string& key, bool def) const {
    auto v = get(key);
    if (!v) return def;
    return *v == "true" || *v == "1" || *v == "yes" || *v == "on";
}

std::vector<std::string> KvConfig::get_list(const std::string& key) const {
    std::vector<std::string> out;
    auto v = get(key);
    if (!v) return out;
    std::istringstream ss(*v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace octo
