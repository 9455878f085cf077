#pragma once

#include <initializer_list>
#include <iosfwd>
#include <string>
#include <vector>

#include "skembed/errors.hpp"

namespace skembed {

/// Plain-text experiment configuration: `[section]` headers, `key = value`
/// lines, `#` comments, UTF-8.  Unknown sections and keys are rejected when a
/// command validates the file against its schema.
class config_file {
 public:
  [[nodiscard]] static config_file parse_file(const std::string& path);
  [[nodiscard]] static config_file parse(std::istream& in, std::string name);

  [[nodiscard]] const std::string& name() const noexcept { return name_; }

  [[nodiscard]] bool has_section(const std::string& section) const noexcept;

  /// Value lookup; null when the section or key is absent.
  [[nodiscard]] const std::string* find(const std::string& section,
                                        const std::string& key) const noexcept;

  [[nodiscard]] std::string require(const std::string& section,
                                    const std::string& key) const;
  [[nodiscard]] std::string get_or(const std::string& section, const std::string& key,
                                   const std::string& fallback) const;

  [[nodiscard]] double require_double(const std::string& section,
                                      const std::string& key) const;
  [[nodiscard]] double get_double_or(const std::string& section,
                                     const std::string& key, double fallback) const;
  [[nodiscard]] long long require_int(const std::string& section,
                                      const std::string& key) const;
  [[nodiscard]] long long get_int_or(const std::string& section,
                                     const std::string& key, long long fallback) const;
  [[nodiscard]] bool get_bool_or(const std::string& section, const std::string& key,
                                 bool fallback) const;

  /// Rejects keys outside the allowed set for a section (if present).
  void check_known_keys(const std::string& section,
                        std::initializer_list<const char*> keys) const;
  /// Rejects sections outside the allowed set.
  void check_known_sections(std::initializer_list<const char*> sections) const;
  void require_section(const std::string& section) const;

  /// Parses a double from text (accepts inf/-inf); raises config_error naming
  /// the described source on garbage.
  [[nodiscard]] static double parse_double(const std::string& text,
                                           const std::string& what);

 private:
  struct entry {
    std::string key;
    std::string value;
    int line = 0;
  };
  struct section_block {
    std::string name;
    std::vector<entry> entries;
  };

  std::string name_;
  std::vector<section_block> sections_;
};

}  // namespace skembed
