#pragma once

#include <Eigen/Dense>
#include <string>

#include "gpcmc/kernels.hpp"

// File formats used by the command-line tools. Numeric CSV with comma or
// whitespace separators; an optional single header row is skipped. Training
// files carry the feature columns followed by a final ±1 label column; test
// files carry features only.

namespace gpcmc::csv {

std::string format_full(double v);  // %.17e

Eigen::MatrixXd read_matrix(const std::string& path);
void write_matrix(const std::string& path, const Eigen::Ref<const Eigen::MatrixXd>& m);

Dataset read_training(const std::string& path);

/// Empty or header-only files yield a 0 x expected_cols matrix.
/// expected_cols < 0 accepts any width.
Eigen::MatrixXd read_features(const std::string& path, Eigen::Index expected_cols = -1);

}  // namespace gpcmc::csv
