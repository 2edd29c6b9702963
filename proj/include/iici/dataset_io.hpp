#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "iici/dataset.hpp"
#include "iici/types.hpp"

// Dataset files. Two variants chosen by extension: ".csv" is decimal text for
// inspection, anything else is the binary record format. Both start with a
// versioned header carrying (Y, C, N, D_raw); observations are stored as
// 32-bit floats (9 significant digits in text), so float pipelines round-trip
// bit-exactly.

namespace iici {

static_assert(std::endian::native == std::endian::little,
              "binary formats are little-endian; big-endian hosts unsupported");

namespace detail {

constexpr char kDatasetMagic[8] = {'I', 'I', 'C', 'I', 'D', 'S', '0', '1'};

inline void write_u32(std::ostream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), 4);
}
inline void write_i32(std::ostream& os, std::int32_t v) {
    os.write(reinterpret_cast<const char*>(&v), 4);
}
inline void write_f32(std::ostream& os, float v) {
    os.write(reinterpret_cast<const char*>(&v), 4);
}

inline std::uint32_t read_u32(std::istream& is, const char* what) {
    std::uint32_t v;
    if (!is.read(reinterpret_cast<char*>(&v), 4))
        throw TruncatedError(std::string("unexpected end of file reading ") + what);
    return v;
}
inline std::int32_t read_i32(std::istream& is, const char* what) {
    std::int32_t v;
    if (!is.read(reinterpret_cast<char*>(&v), 4))
        throw TruncatedError(std::string("unexpected end of file reading ") + what);
    return v;
}
inline float read_f32(std::istream& is, const char* what) {
    float v;
    if (!is.read(reinterpret_cast<char*>(&v), 4))
        throw TruncatedError(std::string("unexpected end of file reading ") + what);
    return v;
}

inline bool has_csv_extension(const std::string& path) {
    return path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
}

// Shortest text form that reparses to the same float.
inline std::string f32_to_text(float v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", double(v));
    return buf;
}

}  // namespace detail

template <class S>
void save_dataset(const Dataset<S>& ds, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot open " + path + " for writing");

    const auto Y = std::uint32_t(ds.num_ids);
    const auto C = std::uint32_t(ds.num_cameras);
    const auto N = std::uint32_t(ds.samples.size());
    const auto D = std::uint32_t(ds.dim());

    if (detail::has_csv_extension(path)) {
        os << "iici_dataset,1," << Y << ',' << C << ',' << N << ',' << D << '\n';
        for (const auto& s : ds.samples) {
            os << s.y << ',' << s.c << ',' << s.u << ',' << s.style_truth;
            for (Index j = 0; j < s.x.size(); ++j)
                os << ',' << detail::f32_to_text(float(s.x[j]));
            os << '\n';
        }
    } else {
        os.write(detail::kDatasetMagic, sizeof(detail::kDatasetMagic));
        detail::write_u32(os, Y);
        detail::write_u32(os, C);
        detail::write_u32(os, N);
        detail::write_u32(os, D);
        for (const auto& s : ds.samples) {
            detail::write_i32(os, s.y);
            detail::write_i32(os, s.c);
            detail::write_i32(os, s.u);
            detail::write_i32(os, s.style_truth);
            for (Index j = 0; j < s.x.size(); ++j)
                detail::write_f32(os, float(s.x[j]));
        }
    }
    if (!os) throw DataError("write failed for " + path);
}

template <class S>
Dataset<S> load_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open " + path);

    Dataset<S> ds;
    std::uint32_t N = 0, D = 0;

    if (detail::has_csv_extension(path)) {
        std::string line;
        if (!std::getline(is, line)) throw HeaderError(path + ": empty file");
        std::istringstream hs(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(hs, field, ',')) fields.push_back(field);
        if (fields.size() != 6 || fields[0] != "iici_dataset")
            throw HeaderError(path + ": not an iici dataset file");
        if (fields[1] != "1")
            throw HeaderError(path + ": unsupported version '" + fields[1] + "'");
        try {
            ds.num_ids = std::stoi(fields[2]);
            ds.num_cameras = std::stoi(fields[3]);
            N = std::uint32_t(std::stoul(fields[4]));
            D = std::uint32_t(std::stoul(fields[5]));
        } catch (const std::exception&) {
            throw HeaderError(path + ": malformed header counts");
        }
        ds.samples.reserve(N);
        for (std::uint32_t i = 0; i < N; ++i) {
            if (!std::getline(is, line))
                throw TruncatedError(path + ": expected " + std::to_string(N) +
                                     " records, got " + std::to_string(i));
            Sample<S> s;
            std::istringstream ls(line);
            char sep;
            if (!(ls >> s.y >> sep >> s.c >> sep >> s.u >> sep >> s.style_truth))
                throw DataError(path + ": malformed record " + std::to_string(i));
            s.x.resize(D);
            for (std::uint32_t j = 0; j < D; ++j) {
                float v;
                if (!(ls >> sep >> v))
                    throw TruncatedError(path + ": record " + std::to_string(i) +
                                         " has fewer than " + std::to_string(D) + " values");
                s.x[j] = S(v);
            }
            ds.samples.push_back(std::move(s));
        }
    } else {
        char magic[sizeof(detail::kDatasetMagic)];
        if (!is.read(magic, sizeof(magic)))
            throw HeaderError(path + ": empty or short file");
        if (std::memcmp(magic, detail::kDatasetMagic, 6) != 0)
            throw HeaderError(path + ": not an iici dataset file");
        if (std::memcmp(magic + 6, detail::kDatasetMagic + 6, 2) != 0)
            throw HeaderError(path + ": unsupported version");
        ds.num_ids = int(detail::read_u32(is, "header"));
        ds.num_cameras = int(detail::read_u32(is, "header"));
        N = detail::read_u32(is, "header");
        D = detail::read_u32(is, "header");
        ds.samples.reserve(N);
        for (std::uint32_t i = 0; i < N; ++i) {
            Sample<S> s;
            s.y = detail::read_i32(is, "record");
            s.c = detail::read_i32(is, "record");
            s.u = detail::read_i32(is, "record");
            s.style_truth = detail::read_i32(is, "record");
            s.x.resize(D);
            for (std::uint32_t j = 0; j < D; ++j) s.x[j] = S(detail::read_f32(is, "record"));
            ds.samples.push_back(std::move(s));
        }
    }

    check_labels(ds);
    return ds;
}

}  // namespace iici
