#include "ndp/toml.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace ndp {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// strips a trailing comment that is not inside a quoted string
std::string strip_comment(const std::string& s) {
  bool in_string = false;
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') in_string = !in_string;
    if (s[i] == '#' && !in_string) return s.substr(0, i);
  }
  return s;
}

}  // namespace

TomlDoc TomlDoc::parse(const std::string& text) {
  TomlDoc doc;
  std::istringstream in(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        fail(ErrorKind::Parse,
             "config line " + std::to_string(line_no) + ": unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        fail(ErrorKind::Parse,
             "config line " + std::to_string(line_no) + ": empty section name");
      doc.sections_[section];
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorKind::Parse,
           "config line " + std::to_string(line_no) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      fail(ErrorKind::Parse,
           "config line " + std::to_string(line_no) + ": empty key or value");
    Entry entry;
    entry.line = line_no;
    if (value.front() == '"') {
      if (value.size() < 2 || value.back() != '"')
        fail(ErrorKind::Parse,
             "config line " + std::to_string(line_no) + ": unterminated string");
      entry.raw = value.substr(1, value.size() - 2);
      entry.quoted = true;
    } else {
      entry.raw = value;
    }
    doc.sections_[section][key] = entry;
  }
  return doc;
}

TomlDoc TomlDoc::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open config file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

const TomlDoc::Entry* TomlDoc::find(const std::string& section,
                                    const std::string& key) const {
  auto sit = sections_.find(section);
  if (sit == sections_.end()) return nullptr;
  auto kit = sit->second.find(key);
  return kit == sit->second.end() ? nullptr : &kit->second;
}

bool TomlDoc::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

std::string TomlDoc::get_string(const std::string& section,
                                const std::string& key,
                                const std::string& fallback) const {
  const Entry* e = find(section, key);
  return e ? e->raw : fallback;
}

std::int64_t TomlDoc::get_int(const std::string& section,
                              const std::string& key,
                              std::int64_t fallback) const {
  const Entry* e = find(section, key);
  if (!e) return fallback;
  try {
    size_t used = 0;
    std::int64_t v = std::stoll(e->raw, &used);
    if (used != e->raw.size()) throw std::invalid_argument(e->raw);
    return v;
  } catch (const std::exception&) {
    fail(ErrorKind::Parse, "config line " + std::to_string(e->line) +
                               ": field '" + key + "' expects an integer, got '" +
                               e->raw + "'");
  }
}

double TomlDoc::get_real(const std::string& section, const std::string& key,
                         double fallback) const {
  const Entry* e = find(section, key);
  if (!e) return fallback;
  try {
    size_t used = 0;
    double v = std::stod(e->raw, &used);
    if (used != e->raw.size()) throw std::invalid_argument(e->raw);
    return v;
  } catch (const std::exception&) {
    fail(ErrorKind::Parse, "config line " + std::to_string(e->line) +
                               ": field '" + key + "' expects a number, got '" +
                               e->raw + "'");
  }
}

bool TomlDoc::get_bool(const std::string& section, const std::string& key,
                       bool fallback) const {
  const Entry* e = find(section, key);
  if (!e) return fallback;
  if (e->raw == "true") return true;
  if (e->raw == "false") return false;
  fail(ErrorKind::Parse, "config line " + std::to_string(e->line) + ": field '" +
                             key + "' expects true or false, got '" + e->raw +
                             "'");
}

}  // namespace ndp
