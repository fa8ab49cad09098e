// SPDX-License-Identifier: Apache-2.0

#ifndef STIR_FETCH_HPP_
#define STIR_FETCH_HPP_

#include <map>
#include <optional>
#include <string>

#include "stir/io.hpp"

namespace stir {

struct NotInIndex : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NetworkError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ChecksumMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Configured SuiteSparse index: matrix name -> (group, rows, cols).
struct SuiteSparseEntry {
    std::string group;
    std::size_t rows;
    std::size_t cols;
    std::optional<std::string> sha256; // pinned digest of the .tar.gz, if any
};

const std::map<std::string, SuiteSparseEntry>& suitesparse_index();

/// Downloads <template>/{group}/{name}.tar.gz (template from the
/// STIR_SUITESPARSE_URL environment variable, with a public default),
/// unpacks the MatrixMarket file into dest_dir, and verifies the declared
/// dimensions after parsing. Returns the path of the extracted .mtx file.
std::string fetch_suitesparse(const std::string& name, const std::string& dest_dir);

/// gzip-decompress a byte buffer (zlib).
std::string gunzip(const std::string& compressed);

/// Extract a single member whose name ends with `suffix` from an
/// uncompressed ustar archive.
std::string tar_extract(const std::string& archive, const std::string& suffix);

std::string sha256_hex(const std::string& data);

} // namespace stir

#endif // STIR_FETCH_HPP_
