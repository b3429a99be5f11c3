#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace kiqr {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Sorted, duplicate-free list of 0-based feature (column) indices.
/// Coefficient vectors carry the intercept at position 0, so feature
/// column c maps to coefficient c + 1.
using IndexSet = std::vector<Index>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-fatal diagnostics (screening overflow, degenerate QBIC, ...). The
/// default handler writes to stderr; tests and the CLI may replace it.
using WarningHandler = std::function<void(const std::string&)>;
void set_warning_handler(WarningHandler handler);
void warn(const std::string& message);

/// Sorts and de-duplicates.
IndexSet make_index_set(std::vector<Index> indices);

bool contains(const IndexSet& set, Index value);

}  // namespace kiqr
