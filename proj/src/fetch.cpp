// SPDX-License-Identifier: Apache-2.0

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "stir/fetch.hpp"

#include <cstdlib>
#include <cstring>
#include <filesystem>

#include <openssl/sha.h>
#include <zlib.h>

namespace stir {

const std::map<std::string, SuiteSparseEntry>& suitesparse_index() {
    // real-valued matrices used in the experiments; qc2534 is complex and
    // deliberately absent
    static const std::map<std::string, SuiteSparseEntry> index = {
        {"rdb1250l", {"Bai", 1250, 1250, std::nullopt}},
        {"heart3", {"Norris", 2339, 2339, std::nullopt}},
        {"west2021", {"HB", 2021, 2021, std::nullopt}},
    };
    return index;
}

std::string gunzip(const std::string& compressed) {
    z_stream zs;
    std::memset(&zs, 0, sizeof(zs));
    if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK)
        throw NetworkError("gunzip: inflateInit failed");
    std::string out;
    out.reserve(compressed.size() * 4);
    char buf[1 << 16];
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(compressed.data()));
    zs.avail_in = static_cast<uInt>(compressed.size());
    int ret = Z_OK;
    do {
        zs.next_out = reinterpret_cast<Bytef*>(buf);
        zs.avail_out = sizeof(buf);
        ret = inflate(&zs, Z_NO_FLUSH);
        if (ret != Z_OK && ret != Z_STREAM_END) {
            inflateEnd(&zs);
            throw NetworkError("gunzip: corrupt gzip stream");
        }
        out.append(buf, sizeof(buf) - zs.avail_out);
    } while (ret != Z_STREAM_END);
    inflateEnd(&zs);
    return out;
}

std::string tar_extract(const std::string& archive, const std::string& suffix) {
    std::size_t off = 0;
    while (off + 512 <= archive.size()) {
        const char* hdr = archive.data() + off;
        if (hdr[0] == '\0') break; // end-of-archive blocks
        std::string name(hdr, strnlen(hdr, 100));
        char size_field[13] = {0};
        std::memcpy(size_field, hdr + 124, 12);
        const std::size_t size = std::strtoull(size_field, nullptr, 8);
        const std::size_t data_off = off + 512;
        if (data_off + size > archive.size()) break;
        if (name.size() >= suffix.size() &&
            name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
            return archive.substr(data_off, size);
        off = data_off + ((size + 511) / 512) * 512;
    }
    throw NetworkError("tar_extract: member ending with '" + suffix + "' not found");
}

std::string sha256_hex(const std::string& data) {
    unsigned char digest[SHA256_DIGEST_LENGTH];
    SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(), digest);
    std::string hex;
    static const char* alphabet = "0123456789abcdef";
    for (unsigned char b : digest) {
        hex += alphabet[b >> 4];
        hex += alphabet[b & 0xF];
    }
    return hex;
}

std::string fetch_suitesparse(const std::string& name, const std::string& dest_dir) {
    const auto& index = suitesparse_index();
    const auto it = index.find(name);
    if (it == index.end()) throw NotInIndex("fetch: '" + name + "' is not in the index");
    const SuiteSparseEntry& entry = it->second;

    std::string tmpl = "https://suitesparse-collection-website.herokuapp.com/MM/{group}/{name}.tar.gz";
    if (const char* env = std::getenv("STIR_SUITESPARSE_URL")) tmpl = env;
    auto substitute = [&](std::string s) {
        const auto rep = [&](const std::string& from, const std::string& to) {
            std::size_t p;
            while ((p = s.find(from)) != std::string::npos) s.replace(p, from.size(), to);
        };
        rep("{group}", entry.group);
        rep("{name}", name);
        return s;
    };
    const std::string url = substitute(tmpl);

    const std::size_t scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw NetworkError("fetch: bad URL " + url);
    const std::size_t host_start = scheme_end + 3;
    const std::size_t path_start = url.find('/', host_start);
    const std::string host = url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

    httplib::Client client(host);
    client.set_follow_location(true);
    client.set_connection_timeout(30);
    client.set_read_timeout(120);
    auto res = client.Get(path);
    if (!res) throw NetworkError("fetch: request to " + url + " failed");
    if (res->status != 200)
        throw NetworkError("fetch: HTTP " + std::to_string(res->status) + " from " + url);

    if (entry.sha256 && sha256_hex(res->body) != *entry.sha256)
        throw ChecksumMismatch("fetch: digest mismatch for " + name);

    const std::string mtx = tar_extract(gunzip(res->body), name + ".mtx");
    std::filesystem::create_directories(dest_dir);
    const std::string out_path = (std::filesystem::path(dest_dir) / (name + ".mtx")).string();
    write_file_atomic(out_path, mtx);

    const AnyMatrix parsed = read_matrix_market(out_path);
    if (matrix_rows(parsed) != entry.rows || matrix_cols(parsed) != entry.cols)
        throw NetworkError("fetch: " + name + " parsed to unexpected dimensions");
    return out_path;
}

} // namespace stir
