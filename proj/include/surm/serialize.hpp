#pragma once

#include <json.hpp>

#include "surm/structured.hpp"

namespace surm {

// Wire format for structured matrices. Every object carries "kind" and a
// flat "params" array; "shape" appears where the dimensions are not implied
// by the parameter count.
//
//   circulant     {"kind":"circulant","params":[c_0..c_{n-1}]}            first column
//   sym_toeplitz  {"kind":"sym_toeplitz","params":[d_0..d_{n-1}]}          d_k on |i-j| = k
//   toeplitz      {"kind":"toeplitz","params":[col_0..col_{n-1}, row_1..row_{n-1}]}
//   kronecker     {"kind":"kronecker","shape":[m1,n1,m2,n2],"params":[A row-major, B row-major]}
//   low_rank      {"kind":"low_rank","shape":[m,n,r],"params":[G row-major, H row-major]}
//   ldr           {"kind":"ldr","shape":[n,r],"params":[G row-major, H row-major]}
//   dense         {"kind":"dense","shape":[rows,cols],"params":[row-major entries]}

nlohmann::json to_json(const Structured& s);

/// Throws std::invalid_argument on schema violations.
Structured structured_from_json(const nlohmann::json& j);

nlohmann::json matrix_to_json(const DenseMatrix& m);

}  // namespace surm
