#pragma once

#include <string>

#include "qbss/model.hpp"
#include "qbss/sampler.hpp"

namespace qbss {

// Headered CSV, row-major, 17 significant digits (exact double round-trip).
void write_matrix_csv(const std::string& path, const MatrixXd& m);
MatrixXd read_matrix_csv(const std::string& path);

void write_vector_csv(const std::string& path, const VectorXd& v);
VectorXd read_vector_csv(const std::string& path);

// Run-length encoding of a binary model: "0x5;1x3" = 5 zeros then 3 ones.
// The all-zeros vector encodes as "0x<p>".
std::string encode_delta(const BinaryModel& delta);
BinaryModel decode_delta(const std::string& rle);

// One row per stored sample: iteration, RLE delta, active theta values
// (semicolon-separated, in coordinate order).
void write_trace_csv(const std::string& path, const Trace& trace, int p);
Trace read_trace_csv(const std::string& path, int* p_out = nullptr);

}  // namespace qbss
