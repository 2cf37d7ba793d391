#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace vsrhpo {

/// Raised for malformed spaces, configurations and space files.
class SpaceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One discrete hyper-parameter dimension: a strictly increasing list of
/// integer candidates.
struct ParamDomain {
  std::string name;
  std::vector<std::int64_t> values;

  std::size_t size() const { return values.size(); }
};

using IndexVector = std::vector<std::size_t>;

/// One point of a space: a value for every domain, keyed by domain name.
class Configuration {
 public:
  Configuration() = default;
  explicit Configuration(std::map<std::string, std::int64_t> assignments)
      : assignments_(std::move(assignments)) {}

  const std::map<std::string, std::int64_t>& assignments() const { return assignments_; }
  std::int64_t at(const std::string& name) const;
  bool contains(const std::string& name) const { return assignments_.count(name) != 0; }

  friend bool operator==(const Configuration&, const Configuration&) = default;

 private:
  std::map<std::string, std::int64_t> assignments_;
};

/// Finite product of ordered discrete domains. Enumeration order is
/// lexicographic over domain indices with the first declared domain slowest.
class SearchSpace {
 public:
  /// Validates and takes ownership of `domains`. Throws SpaceError on
  /// empty input, duplicate names, empty or non-increasing value lists.
  explicit SearchSpace(std::vector<ParamDomain> domains);

  const std::vector<ParamDomain>& domains() const { return domains_; }
  std::size_t dimensions() const { return domains_.size(); }
  std::uint64_t size() const { return size_; }

  IndexVector encode(const Configuration& config) const;
  Configuration decode(std::span<const std::size_t> indices) const;

  /// Lexicographic rank of an index vector (0 .. size()-1).
  std::uint64_t rank(std::span<const std::size_t> indices) const;
  IndexVector unrank(std::uint64_t rank) const;

  /// Throws SpaceError when a value is missing, unknown or out of domain.
  void validate(const Configuration& config) const;
  bool contains(const Configuration& config) const;

  /// Visits every configuration in lexicographic encoded order.
  void for_each(const std::function<void(const Configuration&)>& visit) const;
  std::vector<Configuration> enumerate() const;

  /// Stable 64-bit FNV-1a digest of the canonical JSON form, hex encoded.
  std::string hash() const;

 private:
  std::vector<ParamDomain> domains_;
  std::uint64_t size_ = 1;
};

SearchSpace build_space(std::vector<std::pair<std::string, std::vector<std::int64_t>>> specs);

inline std::uint64_t space_size(const SearchSpace& space) { return space.size(); }

/// Three-dimensional space searched for the face VSR network: residual
/// block width, residual block count and up-sampling width.
SearchSpace paper_space();

/// Parses a space document: {"domains": [{"name": ..., "values": [...]}, ...]}.
/// Unknown keys are rejected. Errors carry a line number where one exists.
SearchSpace parse_space_json(const std::string& text);
SearchSpace load_space_file(const std::string& path);
std::string space_to_json(const SearchSpace& space);

}  // namespace vsrhpo
