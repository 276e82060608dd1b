#pragma once

// Manifest-driven acquisition of input products into a local store.
//
// Manifest: CSV lines product_id,sensor,tile_id,date,url,sha256[,local_path]
// (optional header line, '#' comments). URLs may be https://, http:// or
// file:// (or a bare path). A bearer token is read from GREENZONAL_TOKEN
// and sent with every HTTP(S) request when present.

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <httplib.h>
#include <openssl/evp.h>

#include "greenzonal/csv.hpp"
#include "greenzonal/error.hpp"
#include "greenzonal/file_io.hpp"
#include "greenzonal/parallel.hpp"

namespace greenzonal {

inline constexpr const char* kTokenEnvVar = "GREENZONAL_TOKEN";

struct ManifestEntry {
    std::string product_id;
    std::string sensor;
    std::string tile_id;
    std::string acquisition_date;
    std::string url;
    std::string sha256; // lower-case hex
    std::filesystem::path local_path; // relative to the store directory
};

struct ProductManifest {
    std::vector<ManifestEntry> entries;
};

inline bool is_sha256_hex(const std::string& s) {
    return s.size() == 64 && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isxdigit(c); });
}

inline std::string url_basename(const std::string& url) {
    std::string path = url;
    if (auto q = path.find_first_of("?#"); q != std::string::npos) path.resize(q);
    const auto slash = path.find_last_of('/');
    return slash == std::string::npos ? path : path.substr(slash + 1);
}

inline ProductManifest parse_manifest(std::string_view text) {
    ProductManifest m;
    std::set<std::string> ids;
    for (const auto& row : csv::parse(text)) {
        auto f = row.fields;
        for (auto& s : f) {
            while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
            while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(0, 1);
        }
        if (!f.empty() && f[0] == "product_id") continue;
        if (f.size() != 6 && f.size() != 7) throw ParseError("manifest line needs 6 or 7 fields", row.line);
        ManifestEntry e{f[0], f[1], f[2], f[3], f[4], f[5], {}};
        std::transform(e.sha256.begin(), e.sha256.end(), e.sha256.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (e.product_id.empty()) throw ParseError("empty product_id", row.line);
        if (e.product_id.find('/') != std::string::npos || e.product_id.starts_with("."))
            throw ParseError("product_id must be a plain file name", row.line);
        if (!ids.insert(e.product_id).second) throw ParseError("duplicate product_id '" + e.product_id + "'", row.line);
        if (!is_sha256_hex(e.sha256)) throw ParseError("sha256 must be 64 hex characters", row.line);
        if (f.size() == 7 && !f[6].empty()) {
            e.local_path = f[6];
            if (e.local_path.is_absolute() || e.local_path.lexically_normal().string().starts_with(".."))
                throw ParseError("local_path must stay inside the store", row.line);
        } else {
            const auto ext = std::filesystem::path(url_basename(e.url)).extension();
            e.local_path = e.product_id + ext.string();
        }
        m.entries.push_back(std::move(e));
    }
    return m;
}

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new()) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) throw Error("SHA-256 initialisation failed");
    }
    ~Sha256() { EVP_MD_CTX_free(ctx_); }
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;

    void update(const void* data, std::size_t len) { EVP_DigestUpdate(ctx_, data, len); }

    std::string hex() {
        unsigned char md[EVP_MAX_MD_SIZE];
        unsigned int len = 0;
        EVP_DigestFinal_ex(ctx_, md, &len);
        static constexpr char digits[] = "0123456789abcdef";
        std::string out;
        for (unsigned i = 0; i < len; ++i) {
            out += digits[md[i] >> 4];
            out += digits[md[i] & 15];
        }
        return out;
    }

private:
    EVP_MD_CTX* ctx_;
};

inline std::string sha256_hex(std::string_view data) {
    Sha256 h;
    h.update(data.data(), data.size());
    return h.hex();
}

inline std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    Sha256 h;
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    return h.hex();
}

enum class StoreStatus { ok, missing, corrupt };

inline const char* to_string(StoreStatus s) {
    switch (s) {
    case StoreStatus::ok: return "ok";
    case StoreStatus::missing: return "missing";
    case StoreStatus::corrupt: break;
    }
    return "corrupt";
}

struct StoreAudit {
    std::string product_id;
    StoreStatus status = StoreStatus::missing;
};

// Read-only integrity audit of the store against the manifest.
inline std::vector<StoreAudit> verify_store(const ProductManifest& manifest, const std::filesystem::path& store_dir) {
    std::vector<StoreAudit> out;
    for (const auto& e : manifest.entries) {
        const auto path = store_dir / e.local_path;
        StoreStatus st = StoreStatus::missing;
        std::error_code ec;
        if (std::filesystem::is_regular_file(path, ec)) st = sha256_file(path) == e.sha256 ? StoreStatus::ok : StoreStatus::corrupt;
        out.push_back({e.product_id, st});
    }
    return out;
}

enum class FetchStatus { cached, fetched, failed };

inline const char* to_string(FetchStatus s) {
    switch (s) {
    case FetchStatus::cached: return "cached";
    case FetchStatus::fetched: return "fetched";
    case FetchStatus::failed: break;
    }
    return "failed";
}

struct FetchOutcome {
    std::string product_id;
    FetchStatus status = FetchStatus::failed;
    std::string reason; // for failures
};

struct FetchReport {
    std::vector<FetchOutcome> entries; // manifest order

    std::size_t count(FetchStatus s) const {
        return static_cast<std::size_t>(
            std::count_if(entries.begin(), entries.end(), [&](const FetchOutcome& o) { return o.status == s; }));
    }
};

struct FetchOptions {
    unsigned max_concurrent = 4;
    std::optional<std::string> token; // default: GREENZONAL_TOKEN
    time_t timeout_seconds = 60;
};

namespace detail {

struct ParsedUrl {
    std::string scheme, host_port, path;
};

inline ParsedUrl parse_url(const std::string& url) {
    const auto sep = url.find("://");
    if (sep == std::string::npos) return {"file", "", url};
    ParsedUrl u;
    u.scheme = url.substr(0, sep);
    std::transform(u.scheme.begin(), u.scheme.end(), u.scheme.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    const auto rest = url.substr(sep + 3);
    if (u.scheme == "file") return {"file", "", rest};
    const auto slash = rest.find('/');
    u.host_port = rest.substr(0, slash);
    u.path = slash == std::string::npos ? "/" : rest.substr(slash);
    return u;
}

// Streams `url` into `out`, hashing as it goes. Returns an empty string on
// success, else the failure reason.
inline std::string download(const std::string& url, std::ofstream& out, Sha256& hash, const FetchOptions& opts,
                            const std::optional<std::string>& token) {
    const ParsedUrl u = parse_url(url);
    if (u.scheme == "file") {
        std::ifstream in(u.path, std::ios::binary);
        if (!in) return "cannot open " + u.path;
        std::vector<char> buf(1 << 16);
        while (in) {
            in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
            const auto n = static_cast<std::size_t>(in.gcount());
            hash.update(buf.data(), n);
            out.write(buf.data(), static_cast<std::streamsize>(n));
        }
        return {};
    }
    if (u.scheme != "http" && u.scheme != "https") return "unsupported URL scheme '" + u.scheme + "'";

    httplib::Client client(u.scheme + "://" + u.host_port);
    client.set_follow_location(true);
    client.set_connection_timeout(opts.timeout_seconds);
    client.set_read_timeout(opts.timeout_seconds);
    httplib::Headers headers;
    if (token && !token->empty()) headers.emplace("Authorization", "Bearer " + *token);

    int status = 0;
    auto res = client.Get(
        u.path, headers,
        [&](const httplib::Response& r) {
            status = r.status;
            return r.status == 200;
        },
        [&](const char* data, std::size_t len) {
            hash.update(data, len);
            out.write(data, static_cast<std::streamsize>(len));
            return static_cast<bool>(out);
        });
    if (status == 401 || status == 403)
        return token ? "HTTP " + std::to_string(status) + " (token rejected)"
                     : "HTTP " + std::to_string(status) + " (authentication required; set " + kTokenEnvVar + ")";
    if (status != 0 && status != 200) return "HTTP " + std::to_string(status);
    if (!res) return "network error: " + httplib::to_string(res.error());
    if (!out) return "write error";
    return {};
}

} // namespace detail

// Brings every manifest entry into `store_dir`: entries already present
// with a matching checksum are skipped; others are downloaded to a temp
// file, verified, and renamed into place. Failures are per entry.
inline FetchReport fetch(const ProductManifest& manifest, const std::filesystem::path& store_dir,
                         const FetchOptions& opts = {}) {
    std::filesystem::create_directories(store_dir);
    std::optional<std::string> token = opts.token;
    if (!token) {
        if (const char* env = std::getenv(kTokenEnvVar)) token = std::string(env);
    }

    FetchReport report;
    report.entries.resize(manifest.entries.size());
    parallel_for(manifest.entries.size(), [&](std::size_t i) {
        const auto& e = manifest.entries[i];
        auto& outcome = report.entries[i];
        outcome.product_id = e.product_id;
        const auto target = store_dir / e.local_path;
        std::error_code ec;
        if (std::filesystem::is_regular_file(target, ec)) {
            if (sha256_file(target) == e.sha256) {
                outcome.status = FetchStatus::cached;
                return;
            }
            std::filesystem::remove(target, ec);
        }
        std::filesystem::create_directories(target.parent_path(), ec);
        const auto tmp = target.parent_path() / ("." + target.filename().string() + ".part-" + detail::random_suffix());
        std::string failure;
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) {
                failure = "cannot create " + tmp.string();
            } else {
                Sha256 hash;
                failure = detail::download(e.url, out, hash, opts, token);
                out.flush();
                if (failure.empty() && !out) failure = "write error";
                if (failure.empty()) {
                    const std::string got = hash.hex();
                    if (got != e.sha256) failure = "checksum mismatch (got " + got + ")";
                }
            }
        }
        if (!failure.empty()) {
            std::filesystem::remove(tmp, ec);
            outcome.status = FetchStatus::failed;
            outcome.reason = failure;
            return;
        }
        std::filesystem::rename(tmp, target, ec);
        if (ec) {
            std::filesystem::remove(tmp, ec);
            outcome.status = FetchStatus::failed;
            outcome.reason = "cannot place file: " + ec.message();
            return;
        }
        outcome.status = FetchStatus::fetched;
    }, std::max(1u, opts.max_concurrent));
    return report;
}

} // namespace greenzonal
