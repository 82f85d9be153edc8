#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "graph.hpp"
#include "markov.hpp"

namespace frlab {

inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a64(const std::string& s,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
    return fnv1a64(s.data(), s.size(), h);
}

// Digest of the canonical edge list "u v w\n" (u < v, ascending, %.17g
// weights). Two graphs share a fingerprint iff they have identical edges and
// weights, which is exactly when their kernel columns coincide.
inline std::uint64_t graph_fingerprint(const WeightedGraph& g) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char line[96];
    for (int x = 0; x < g.vertex_count(); ++x) {
        auto nbrs = g.neighbors(x);
        auto wts = g.weights(x);
        for (std::size_t i = 0; i < nbrs.size(); ++i) {
            if (nbrs[i] < x) continue;
            const int len = std::snprintf(line, sizeof line, "%d %d %.17g\n",
                                          x, nbrs[i], wts[i]);
            h = fnv1a64(line, static_cast<std::size_t>(len), h);
        }
    }
    return h;
}

inline std::uint64_t file_digest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw resource_error("file_digest: cannot open " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0)
        h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
    return h;
}

// On-disk kernel-column cache. One file per (graph, y, alpha, k): a single
// header line "KCOL v1 <fp> <y> <alpha> <k> <V>" followed by V raw doubles.
// Any header mismatch or short read is a miss, never an error.
class KernelCache {
public:
    KernelCache() = default;
    explicit KernelCache(std::filesystem::path dir) : dir_(std::move(dir)) {
        if (!dir_.empty()) std::filesystem::create_directories(dir_);
    }

    bool enabled() const { return !dir_.empty(); }
    const std::string& last_warning() const { return last_warning_; }

    std::optional<KernelColumn> lookup(std::uint64_t fingerprint, int y, double alpha,
                                       int k, int nv) {
        last_warning_.clear();
        if (!enabled()) return std::nullopt;
        const auto path = entry_path(fingerprint, y, alpha, k);
        std::ifstream in(path, std::ios::binary);
        if (!in) return std::nullopt;
        std::string header;
        if (!std::getline(in, header)) return miss_warning(path, "unreadable header");
        if (header != header_line(fingerprint, y, alpha, k, nv))
            return miss_warning(path, "header mismatch");
        KernelColumn col;
        col.y = y;
        col.k = k;
        col.values.resize(nv);
        in.read(reinterpret_cast<char*>(col.values.data()),
                static_cast<std::streamsize>(sizeof(double) * col.values.size()));
        if (in.gcount() != static_cast<std::streamsize>(sizeof(double) * col.values.size()))
            return miss_warning(path, "truncated data block");
        return col;
    }

    void store(std::uint64_t fingerprint, double alpha, const KernelColumn& col) {
        if (!enabled()) return;
        static_assert(std::endian::native == std::endian::little,
                      "cache files are written in little-endian layout");
        const auto path = entry_path(fingerprint, col.y, alpha, col.k);
        const auto tmp = path.string() + ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out)
                throw resource_error("kernel cache: cannot write " + tmp);
            out << header_line(fingerprint, col.y, alpha, col.k,
                               static_cast<int>(col.values.size())) << '\n';
            out.write(reinterpret_cast<const char*>(col.values.data()),
                      static_cast<std::streamsize>(sizeof(double) * col.values.size()));
        }
        std::filesystem::rename(tmp, path);
    }

private:
    std::string header_line(std::uint64_t fp, int y, double alpha, int k, int nv) const {
        char buf[160];
        std::snprintf(buf, sizeof buf, "KCOL v1 %016llx %d %.17g %d %d",
                      static_cast<unsigned long long>(fp), y, alpha, k, nv);
        return std::string(buf);
    }

    std::filesystem::path entry_path(std::uint64_t fp, int y, double alpha, int k) const {
        char abuf[40];
        std::snprintf(abuf, sizeof abuf, "%.17g", alpha);
        std::string atag(abuf);
        for (char& c : atag)
            if (c == '.' || c == '-' || c == '+') c = '_';
        char name[160];
        std::snprintf(name, sizeof name, "kcol_%016llx_y%d_a%s_k%d.bin",
                      static_cast<unsigned long long>(fp), y, atag.c_str(), k);
        return dir_ / name;
    }

    std::optional<KernelColumn> miss_warning(const std::filesystem::path& path,
                                             const std::string& why) {
        last_warning_ = "kernel cache: treating " + path.string() + " as a miss (" + why + ")";
        return std::nullopt;
    }

    std::filesystem::path dir_;
    std::string last_warning_;
};

} // namespace frlab
