#pragma once

#include <stdexcept>
#include <string>

namespace subalign {

// Malformed input file (corpus, gold standard, pharaoh, merge table).
// Messages carry 1-based line numbers where applicable.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Internally inconsistent data, e.g. a subword alignment paired with
// word maps from a different segmentation scheme.
class IntegrityError : public std::runtime_error {
 public:
  explicit IntegrityError(const std::string& what) : std::runtime_error(what) {}
};

// Failure of an external aligner invocation; carries the tool's diagnostics.
class AdapterError : public std::runtime_error {
 public:
  explicit AdapterError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace subalign
