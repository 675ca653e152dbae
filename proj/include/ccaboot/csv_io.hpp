#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>

namespace ccaboot {

// Shortest decimal string that round-trips the double exactly.
std::string format_double(double value);

// Matrix CSV: one observation per row, comma separated, no header.
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path,
                                bool skip_header = false);

void write_matrix_csv(const std::filesystem::path& path,
                      const Eigen::MatrixXd& m);

std::string matrix_to_csv(const Eigen::MatrixXd& m);

// Writes to a temporary file in the target directory, then renames. The
// destination never holds partial content.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& contents);

// FNV-1a digest of a file's bytes, as fixed-width hex.
std::string file_digest(const std::filesystem::path& path);

}  // namespace ccaboot
