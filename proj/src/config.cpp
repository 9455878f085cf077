#include "skembed/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <sstream>

namespace skembed {

namespace {

// ---- line utilities ----

std::string strip(const std::string& text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
  return text.substr(begin, end - begin);
}

std::string drop_comment(const std::string& text) {
  const std::size_t hash = text.find('#');
  return hash == std::string::npos ? text : text.substr(0, hash);
}

[[noreturn]] void fail_at(const std::string& name, int line, const std::string& what) {
  raise(errc::config_error, name + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

// ---- parsing ----

config_file config_file::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(errc::config_error, "cannot open config file '" + path + "'");
  return parse(in, path);
}

config_file config_file::parse(std::istream& in, std::string name) {
  config_file cfg;
  cfg.name_ = std::move(name);
  section_block* current = nullptr;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    const std::string line = strip(drop_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        fail_at(cfg.name_, line_no, "malformed section header '" + line + "'");
      const std::string section = strip(line.substr(1, line.size() - 2));
      if (section.empty()) fail_at(cfg.name_, line_no, "empty section name");
      for (const auto& existing : cfg.sections_)
        if (existing.name == section)
          fail_at(cfg.name_, line_no, "duplicate section [" + section + "]");
      cfg.sections_.push_back({section, {}});
      current = &cfg.sections_.back();
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      fail_at(cfg.name_, line_no, "expected 'key = value', got '" + line + "'");
    const std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));
    if (key.empty()) fail_at(cfg.name_, line_no, "empty key");
    if (current == nullptr)
      fail_at(cfg.name_, line_no, "key '" + key + "' appears before any [section]");
    for (const auto& existing : current->entries)
      if (existing.key == key)
        fail_at(cfg.name_, line_no,
                "duplicate key '" + key + "' in [" + current->name + "]");
    current->entries.push_back({key, value, line_no});
  }
  return cfg;
}

// ---- lookup ----

bool config_file::has_section(const std::string& section) const noexcept {
  for (const auto& block : sections_)
    if (block.name == section) return true;
  return false;
}

const std::string* config_file::find(const std::string& section,
                                     const std::string& key) const noexcept {
  for (const auto& block : sections_) {
    if (block.name != section) continue;
    for (const auto& item : block.entries)
      if (item.key == key) return &item.value;
  }
  return nullptr;
}

std::string config_file::require(const std::string& section,
                                 const std::string& key) const {
  const std::string* value = find(section, key);
  if (value == nullptr)
    raise(errc::config_error,
          name_ + ": missing required key '" + key + "' in [" + section + "]");
  return *value;
}

std::string config_file::get_or(const std::string& section, const std::string& key,
                                const std::string& fallback) const {
  const std::string* value = find(section, key);
  return value == nullptr ? fallback : *value;
}

double config_file::parse_double(const std::string& text, const std::string& what) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const double value = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    raise(errc::config_error, what + ": cannot parse number from '" + text + "'");
  return value;
}

double config_file::require_double(const std::string& section,
                                   const std::string& key) const {
  return parse_double(require(section, key),
                      name_ + ": [" + section + "] " + key);
}

double config_file::get_double_or(const std::string& section, const std::string& key,
                                  double fallback) const {
  const std::string* value = find(section, key);
  if (value == nullptr) return fallback;
  return parse_double(*value, name_ + ": [" + section + "] " + key);
}

long long config_file::require_int(const std::string& section,
                                   const std::string& key) const {
  const std::string text = require(section, key);
  const char* begin = text.c_str();
  char* end = nullptr;
  const long long value = std::strtoll(begin, &end, 10);
  if (end == begin || *end != '\0')
    raise(errc::config_error, name_ + ": [" + section + "] " + key +
                                  ": cannot parse integer from '" + text + "'");
  return value;
}

long long config_file::get_int_or(const std::string& section, const std::string& key,
                                  long long fallback) const {
  return find(section, key) == nullptr ? fallback : require_int(section, key);
}

bool config_file::get_bool_or(const std::string& section, const std::string& key,
                              bool fallback) const {
  const std::string* value = find(section, key);
  if (value == nullptr) return fallback;
  std::string low = *value;
  for (char& c : low) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (low == "true" || low == "on" || low == "yes" || low == "1") return true;
  if (low == "false" || low == "off" || low == "no" || low == "0") return false;
  raise(errc::config_error, name_ + ": [" + section + "] " + key +
                                ": cannot parse boolean from '" + *value + "'");
}

// ---- schema checks ----

void config_file::check_known_keys(const std::string& section,
                                   std::initializer_list<const char*> keys) const {
  for (const auto& block : sections_) {
    if (block.name != section) continue;
    for (const auto& item : block.entries) {
      bool known = false;
      for (const char* allowed : keys)
        if (item.key == allowed) {
          known = true;
          break;
        }
      if (!known)
        fail_at(name_, item.line,
                "unknown key '" + item.key + "' in [" + section + "]");
    }
  }
}

void config_file::check_known_sections(
    std::initializer_list<const char*> sections) const {
  for (const auto& block : sections_) {
    bool known = false;
    for (const char* allowed : sections)
      if (block.name == allowed) {
        known = true;
        break;
      }
    if (!known)
      raise(errc::config_error, name_ + ": unknown section [" + block.name + "]");
  }
}

void config_file::require_section(const std::string& section) const {
  if (!has_section(section))
    raise(errc::config_error, name_ + ": missing required section [" + section + "]");
}

}  // namespace skembed
