#include <charconv>
#include <fstream>
#include <sstream>

#include "phasekit/cli.hpp"

namespace phasekit::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_')) return false;
  return true;
}

std::string where(const std::string& section, const std::string& key) {
  return section + "." + key;
}

template <class T>
bool parse_number(const std::string& text, T& out) {
  const char* first = text.data();
  const char* last = first + text.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

// Shortest text that parses back to the same double.
std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) items.push_back(trim(item));
  if (!text.empty() && text.back() == ',') items.push_back("");
  return items;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
  return out;
}

}  // namespace

ConfigError::ConfigError(const std::string& message, int line)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
      line_(line) {}

Config Config::parse(std::istream& in) {
  Config cfg;
  std::string section = "run";
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string text = trim(raw);
    if (text.empty() || text[0] == '#' || text[0] == ';') continue;
    if (text[0] == '[') {
      if (text.back() != ']') throw ConfigError("unterminated section header", line);
      const std::string name = trim(text.substr(1, text.size() - 2));
      if (!valid_name(name)) throw ConfigError("bad section name '" + name + "'", line);
      section = name;
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line);
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (!valid_name(key)) throw ConfigError("bad key name '" + key + "'", line);
    if (value.empty()) throw ConfigError("empty value for " + where(section, key), line);
    auto& entries = cfg.sections_[section];
    if (const auto it = entries.find(key); it != entries.end())
      throw ConfigError("duplicate key " + where(section, key) + " (first at line " +
                            std::to_string(it->second.line) + ")",
                        line);
    entries[key] = Entry{value, line, false};
  }
  return cfg;
}

Config Config::parse_string(const std::string& text) {
  std::istringstream in(text);
  return parse(in);
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  return parse(in);
}

bool Config::has(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key) > 0;
}

int Config::line(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  if (s == sections_.end()) return 0;
  const auto e = s->second.find(key);
  return e == s->second.end() ? 0 : e->second.line;
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
  if (!valid_name(section) || !valid_name(key))
    throw ConfigError("bad override name " + where(section, key));
  if (trim(value).empty()) throw ConfigError("empty value for " + where(section, key));
  sections_[section][key] = Entry{trim(value), 0, false};
}

Config::Entry* Config::find(const std::string& section, const std::string& key) {
  const auto s = sections_.find(section);
  if (s == sections_.end()) return nullptr;
  const auto e = s->second.find(key);
  return e == s->second.end() ? nullptr : &e->second;
}

Config::Entry& Config::fetch(const std::string& section, const std::string& key,
                             const std::string& fallback) {
  Entry* e = find(section, key);
  if (!e) e = &(sections_[section][key] = Entry{fallback, 0, false});
  e->used = true;
  return *e;
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& fallback) {
  return fetch(section, key, fallback).value;
}

double Config::get_double(const std::string& section, const std::string& key, double fallback) {
  const Entry& e = fetch(section, key, format_double(fallback));
  double v = 0.0;
  if (!parse_number(e.value, v))
    throw ConfigError(where(section, key) + ": expected a number, got '" + e.value + "'", e.line);
  return v;
}

int Config::get_int(const std::string& section, const std::string& key, int fallback) {
  const Entry& e = fetch(section, key, std::to_string(fallback));
  int v = 0;
  if (!parse_number(e.value, v))
    throw ConfigError(where(section, key) + ": expected an integer, got '" + e.value + "'",
                      e.line);
  return v;
}

std::uint64_t Config::get_u64(const std::string& section, const std::string& key,
                              std::uint64_t fallback) {
  const Entry& e = fetch(section, key, std::to_string(fallback));
  std::uint64_t v = 0;
  if (!parse_number(e.value, v))
    throw ConfigError(
        where(section, key) + ": expected an unsigned integer, got '" + e.value + "'", e.line);
  return v;
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) {
  const Entry& e = fetch(section, key, fallback ? "true" : "false");
  if (e.value == "true" || e.value == "yes" || e.value == "1") return true;
  if (e.value == "false" || e.value == "no" || e.value == "0") return false;
  throw ConfigError(where(section, key) + ": expected true or false, got '" + e.value + "'",
                    e.line);
}

std::vector<std::string> Config::get_list(const std::string& section, const std::string& key,
                                          const std::vector<std::string>& fallback) {
  const Entry& e = fetch(section, key, join(fallback));
  std::vector<std::string> items = split_list(e.value);
  for (const std::string& item : items)
    if (item.empty())
      throw ConfigError(where(section, key) + ": empty list item in '" + e.value + "'", e.line);
  return items;
}

std::vector<double> Config::get_doubles(const std::string& section, const std::string& key,
                                        const std::vector<double>& fallback) {
  std::vector<std::string> text;
  for (double v : fallback) text.push_back(format_double(v));
  std::vector<double> out;
  for (const std::string& item : get_list(section, key, text)) {
    double v = 0.0;
    if (!parse_number(item, v))
      throw ConfigError(where(section, key) + ": expected a number, got '" + item + "'",
                        line(section, key));
    out.push_back(v);
  }
  return out;
}

void Config::check_all_used() const {
  const Entry* first = nullptr;
  std::string name;
  for (const auto& [section, entries] : sections_)
    for (const auto& [key, e] : entries)
      if (!e.used && (!first || e.line < first->line)) {
        first = &e;
        name = where(section, key);
      }
  if (first) throw ConfigError("unknown key " + name, first->line);
}

std::string Config::to_text() const {
  std::ostringstream os;
  bool first = true;
  for (const auto& [section, entries] : sections_) {
    if (entries.empty()) continue;
    os << (first ? "" : "\n") << '[' << section << "]\n";
    first = false;
    for (const auto& [key, e] : entries) os << key << " = " << e.value << '\n';
  }
  return os.str();
}

std::map<std::string, std::map<std::string, std::string>> Config::values() const {
  std::map<std::string, std::map<std::string, std::string>> out;
  for (const auto& [section, entries] : sections_)
    for (const auto& [key, e] : entries) out[section][key] = e.value;
  return out;
}

}  // namespace phasekit::cli
