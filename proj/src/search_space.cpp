#include "vsrhpo/search_space.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json_util.hpp"

namespace vsrhpo {

std::int64_t Configuration::at(const std::string& name) const {
  auto it = assignments_.find(name);
  if (it == assignments_.end()) throw SpaceError("configuration has no value for '" + name + "'");
  return it->second;
}

SearchSpace::SearchSpace(std::vector<ParamDomain> domains) : domains_(std::move(domains)) {
  if (domains_.empty()) throw SpaceError("search space needs at least one domain");
  std::set<std::string> names;
  for (const auto& d : domains_) {
    if (d.name.empty()) throw SpaceError("domain name must be nonempty");
    if (!names.insert(d.name).second) throw SpaceError("duplicate domain name '" + d.name + "'");
    if (d.values.empty()) throw SpaceError("domain '" + d.name + "' has no values");
    for (std::size_t i = 1; i < d.values.size(); ++i) {
      if (d.values[i] <= d.values[i - 1]) {
        throw SpaceError("domain '" + d.name + "' values must be strictly increasing");
      }
    }
    if (size_ > std::numeric_limits<std::uint64_t>::max() / d.values.size()) {
      throw SpaceError("search space size overflows 64 bits");
    }
    size_ *= d.values.size();
  }
}

IndexVector SearchSpace::encode(const Configuration& config) const {
  if (config.assignments().size() != domains_.size()) {
    validate(config);  // reports the precise problem
  }
  IndexVector out;
  out.reserve(domains_.size());
  for (const auto& d : domains_) {
    const std::int64_t v = config.at(d.name);
    auto it = std::lower_bound(d.values.begin(), d.values.end(), v);
    if (it == d.values.end() || *it != v) {
      throw SpaceError("value " + std::to_string(v) + " is not in domain '" + d.name + "'");
    }
    out.push_back(static_cast<std::size_t>(it - d.values.begin()));
  }
  return out;
}

Configuration SearchSpace::decode(std::span<const std::size_t> indices) const {
  if (indices.size() != domains_.size()) throw SpaceError("index vector has wrong dimension");
  std::map<std::string, std::int64_t> a;
  for (std::size_t i = 0; i < domains_.size(); ++i) {
    if (indices[i] >= domains_[i].size()) {
      throw SpaceError("index out of range for domain '" + domains_[i].name + "'");
    }
    a.emplace(domains_[i].name, domains_[i].values[indices[i]]);
  }
  return Configuration(std::move(a));
}

std::uint64_t SearchSpace::rank(std::span<const std::size_t> indices) const {
  if (indices.size() != domains_.size()) throw SpaceError("index vector has wrong dimension");
  std::uint64_t r = 0;
  for (std::size_t i = 0; i < domains_.size(); ++i) {
    if (indices[i] >= domains_[i].size()) throw SpaceError("index out of range");
    r = r * domains_[i].size() + indices[i];
  }
  return r;
}

IndexVector SearchSpace::unrank(std::uint64_t r) const {
  if (r >= size_) throw SpaceError("rank out of range");
  IndexVector out(domains_.size());
  for (std::size_t i = domains_.size(); i-- > 0;) {
    out[i] = static_cast<std::size_t>(r % domains_[i].size());
    r /= domains_[i].size();
  }
  return out;
}

void SearchSpace::validate(const Configuration& config) const {
  for (const auto& d : domains_) {
    if (!config.contains(d.name)) throw SpaceError("missing assignment for '" + d.name + "'");
    const std::int64_t v = config.at(d.name);
    if (!std::binary_search(d.values.begin(), d.values.end(), v)) {
      throw SpaceError("value " + std::to_string(v) + " is not in domain '" + d.name + "'");
    }
  }
  if (config.assignments().size() != domains_.size()) {
    for (const auto& [name, value] : config.assignments()) {
      bool known = std::any_of(domains_.begin(), domains_.end(),
                               [&](const ParamDomain& d) { return d.name == name; });
      if (!known) throw SpaceError("unknown domain '" + name + "' in configuration");
    }
  }
}

bool SearchSpace::contains(const Configuration& config) const {
  try {
    validate(config);
    return true;
  } catch (const SpaceError&) {
    return false;
  }
}

void SearchSpace::for_each(const std::function<void(const Configuration&)>& visit) const {
  IndexVector idx(domains_.size(), 0);
  for (std::uint64_t n = 0; n < size_; ++n) {
    visit(decode(idx));
    // odometer increment, last domain fastest
    for (std::size_t i = domains_.size(); i-- > 0;) {
      if (++idx[i] < domains_[i].size()) break;
      idx[i] = 0;
    }
  }
}

std::vector<Configuration> SearchSpace::enumerate() const {
  std::vector<Configuration> out;
  out.reserve(static_cast<std::size_t>(size_));
  for_each([&](const Configuration& c) { out.push_back(c); });
  return out;
}

std::string SearchSpace::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(detail::fnv1a64(space_to_json(*this))));
  return buf;
}

SearchSpace build_space(std::vector<std::pair<std::string, std::vector<std::int64_t>>> specs) {
  std::vector<ParamDomain> domains;
  domains.reserve(specs.size());
  for (auto& [name, values] : specs) domains.push_back({std::move(name), std::move(values)});
  return SearchSpace(std::move(domains));
}

SearchSpace paper_space() {
  std::vector<std::int64_t> widths;
  for (std::int64_t c = 32; c <= 320; c += 32) widths.push_back(c);
  return build_space({{"res_channels", widths},
                      {"n_res", {1, 2, 3, 4, 5, 6, 7, 8}},
                      {"up_channels", widths}});
}

namespace {

// Line of the n-th (0-based) occurrence of `"name"` key in the raw text.
std::size_t line_of_domain(const std::string& text, std::size_t domain_index) {
  std::size_t pos = 0;
  for (std::size_t seen = 0;; ++seen) {
    pos = text.find("\"name\"", pos);
    if (pos == std::string::npos) return 0;
    if (seen == domain_index) return detail::line_of_offset(text, pos);
    ++pos;
  }
}

[[noreturn]] void fail_at(const std::string& text, std::size_t domain_index, const std::string& what) {
  const std::size_t line = line_of_domain(text, domain_index);
  if (line == 0) throw SpaceError(what);
  throw SpaceError("line " + std::to_string(line) + ": " + what);
}

}  // namespace

SearchSpace parse_space_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SpaceError("line " + std::to_string(detail::line_of_offset(text, e.byte)) +
                     ": malformed JSON (" + e.what() + ")");
  }
  if (!doc.is_object()) throw SpaceError("line 1: space document must be a JSON object");
  if (auto bad = detail::first_unknown_key(doc, {"domains"}); !bad.empty()) {
    throw SpaceError("unknown key '" + bad + "' in space document");
  }
  if (!doc.contains("domains") || !doc["domains"].is_array()) {
    throw SpaceError("space document needs a \"domains\" array");
  }
  std::vector<ParamDomain> domains;
  std::set<std::string> names;
  const auto& list = doc["domains"];
  for (std::size_t i = 0; i < list.size(); ++i) {
    const auto& d = list[i];
    if (!d.is_object()) fail_at(text, i, "domain " + std::to_string(i) + " must be an object");
    if (auto bad = detail::first_unknown_key(d, {"name", "values"}); !bad.empty()) {
      fail_at(text, i, "unknown key '" + bad + "' in domain " + std::to_string(i));
    }
    if (!d.contains("name") || !d["name"].is_string()) {
      fail_at(text, i, "domain " + std::to_string(i) + " needs a string \"name\"");
    }
    if (!d.contains("values") || !d["values"].is_array()) {
      fail_at(text, i, "domain " + std::to_string(i) + " needs a \"values\" array");
    }
    ParamDomain pd;
    pd.name = d["name"].get<std::string>();
    for (const auto& v : d["values"]) {
      if (!v.is_number_integer()) fail_at(text, i, "domain '" + pd.name + "' values must be integers");
      pd.values.push_back(v.get<std::int64_t>());
    }
    if (!names.insert(pd.name).second) fail_at(text, i, "duplicate domain name '" + pd.name + "'");
    try {
      SearchSpace single({pd});
    } catch (const SpaceError& e) {
      fail_at(text, i, e.what());
    }
    domains.push_back(std::move(pd));
  }
  return SearchSpace(std::move(domains));
}

SearchSpace load_space_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SpaceError("cannot open space file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_space_json(ss.str());
}

std::string space_to_json(const SearchSpace& space) {
  detail::ordered_json doc;
  doc["domains"] = detail::ordered_json::array();
  for (const auto& d : space.domains()) {
    detail::ordered_json entry;
    entry["name"] = d.name;
    entry["values"] = d.values;
    doc["domains"].push_back(entry);
  }
  return doc.dump();
}

}  // namespace vsrhpo
