#pragma once

#include <atomic>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "mloz/core.hpp"
#include "mloz/digest.hpp"
#include "mloz/error.hpp"
#include "mloz/trainer.hpp"

namespace mloz {

// On-disk containers. Both share one envelope:
//
//   magic[8] | header (little-endian u32 fields) | payload (little-endian
//   float64 arrays) | trailer u64 = FNV-1a over the payload bytes
//
// Coefficient file "MLOZC001", header nlat, nlon, nlev_out, nfeat, nlev,
// clim_kind; payload level_height_m, lat, lon, coeffs, alpha, x_mean, x_std,
// y_mean, y_std, cap climatology rows.
// Field file "MLOZF001", header ntime, nlat, nlon, nlev, variable, spinup;
// payload level_height_m, lat, lon, data.
// Arrays are row-major with level fastest. Readers trust nothing: length,
// checksum, dimensions, and value invariants are all re-checked on load.

inline constexpr char kCoeffMagic[8] = {'M', 'L', 'O', 'Z', 'C', '0', '0', '1'};
inline constexpr char kFieldMagic[8] = {'M', 'L', 'O', 'Z', 'F', '0', '0', '1'};

enum class StoreErr {
    io,
    bad_magic,
    bad_length,
    bad_checksum,
    bad_dimension,
    bad_value,
};

class StoreError : public Error {
public:
    StoreError(StoreErr kind, std::string msg)
        : Error(kind == StoreErr::io ? Errc::io : Errc::data, std::move(msg)), kind_(kind) {}
    StoreErr kind() const noexcept { return kind_; }

private:
    StoreErr kind_;
};

namespace storedetail {

static_assert(sizeof(double) == 8 && std::numeric_limits<double>::is_iec559);

inline void encode_u32(std::uint32_t v, unsigned char* out) {
    out[0] = static_cast<unsigned char>(v);
    out[1] = static_cast<unsigned char>(v >> 8);
    out[2] = static_cast<unsigned char>(v >> 16);
    out[3] = static_cast<unsigned char>(v >> 24);
}

inline std::uint32_t decode_u32(const unsigned char* in) {
    return static_cast<std::uint32_t>(in[0]) | (static_cast<std::uint32_t>(in[1]) << 8) |
           (static_cast<std::uint32_t>(in[2]) << 16) | (static_cast<std::uint32_t>(in[3]) << 24);
}

inline void encode_u64(std::uint64_t v, unsigned char* out) {
    for (int i = 0; i < 8; ++i) {
        out[i] = static_cast<unsigned char>(v >> (8 * i));
    }
}

inline std::uint64_t decode_u64(const unsigned char* in) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v |= static_cast<std::uint64_t>(in[i]) << (8 * i);
    }
    return v;
}

// Streams payload float64 arrays in little-endian order while folding the
// exact bytes written into the running checksum.
class PayloadWriter {
public:
    explicit PayloadWriter(std::ofstream& out) : out_(out) {}

    void write(const double* values, std::size_t count) {
        constexpr std::size_t chunk = 65536;
        std::vector<unsigned char> buf(chunk * 8);
        while (count > 0) {
            std::size_t n = std::min(count, chunk);
            if constexpr (std::endian::native == std::endian::little) {
                std::memcpy(buf.data(), values, n * 8);
            } else {
                for (std::size_t i = 0; i < n; ++i) {
                    encode_u64(std::bit_cast<std::uint64_t>(values[i]), buf.data() + i * 8);
                }
            }
            out_.write(reinterpret_cast<const char*>(buf.data()),
                       static_cast<std::streamsize>(n * 8));
            checksum_ = fnv1a64(buf.data(), n * 8, checksum_);
            values += n;
            count -= n;
        }
    }

    std::uint64_t checksum() const { return checksum_; }

private:
    std::ofstream& out_;
    std::uint64_t checksum_ = kFnvOffsetBasis;
};

class PayloadReader {
public:
    explicit PayloadReader(std::ifstream& in) : in_(in) {}

    void read(double* values, std::size_t count) {
        constexpr std::size_t chunk = 65536;
        std::vector<unsigned char> buf(chunk * 8);
        while (count > 0) {
            std::size_t n = std::min(count, chunk);
            in_.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n * 8));
            if (!in_) {
                throw StoreError(StoreErr::bad_length, "payload ends before its declared size");
            }
            checksum_ = fnv1a64(buf.data(), n * 8, checksum_);
            if constexpr (std::endian::native == std::endian::little) {
                std::memcpy(values, buf.data(), n * 8);
            } else {
                for (std::size_t i = 0; i < n; ++i) {
                    values[i] = std::bit_cast<double>(decode_u64(buf.data() + i * 8));
                }
            }
            values += n;
            count -= n;
        }
    }

    std::uint64_t checksum() const { return checksum_; }

private:
    std::ifstream& in_;
    std::uint64_t checksum_ = kFnvOffsetBasis;
};

inline std::filesystem::path temp_sibling(const std::filesystem::path& target) {
    static std::atomic<std::uint64_t> counter{0};
    std::uint64_t seq = counter.fetch_add(1);
    return target.parent_path() /
           (target.filename().string() + ".tmp-" + std::to_string(seq) + "-" +
            std::to_string(static_cast<std::uint64_t>(
                std::hash<std::thread::id>{}(std::this_thread::get_id()))));
}

// Write-then-rename so a crash or concurrent reader never sees a torn file.
template <typename Body>
void atomic_write(const std::filesystem::path& path, Body&& body) {
    std::filesystem::path tmp = temp_sibling(path);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw StoreError(StoreErr::io, "cannot open for writing: " + tmp.string());
        }
        body(out);
        out.flush();
        if (!out) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw StoreError(StoreErr::io, "write failed: " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw StoreError(StoreErr::io, "cannot move into place: " + path.string());
    }
}

inline void check_dim(std::uint32_t v, const char* what) {
    if (v == 0 || v > (1u << 24)) {
        throw StoreError(StoreErr::bad_dimension, std::string("implausible dimension for ") + what +
                                                      ": " + std::to_string(v));
    }
}

inline std::vector<double> axis_to_vector(std::span<const double> axis) {
    return {axis.begin(), axis.end()};
}

inline GridSpec grid_from_payload(std::vector<double> lats, std::vector<double> lons,
                                  std::vector<double> levels) {
    try {
        return GridSpec::make(std::move(lats), std::move(lons), std::move(levels));
    } catch (const Error& e) {
        throw StoreError(StoreErr::bad_value, std::string("invalid grid axes in file: ") + e.what());
    }
}

}  // namespace storedetail

inline void write_coefficients(const CoefficientSet& set, const std::filesystem::path& path) {
    set.validate();
    storedetail::atomic_write(path, [&](std::ofstream& out) {
        unsigned char header[8 + 6 * 4];
        std::memcpy(header, kCoeffMagic, 8);
        storedetail::encode_u32(static_cast<std::uint32_t>(set.grid.nlat()), header + 8);
        storedetail::encode_u32(static_cast<std::uint32_t>(set.grid.nlon()), header + 12);
        storedetail::encode_u32(static_cast<std::uint32_t>(set.nlev_out), header + 16);
        storedetail::encode_u32(static_cast<std::uint32_t>(set.nfeat), header + 20);
        storedetail::encode_u32(static_cast<std::uint32_t>(set.grid.nlev()), header + 24);
        storedetail::encode_u32(static_cast<std::uint32_t>(set.cap_kind), header + 28);
        out.write(reinterpret_cast<const char*>(header), sizeof(header));

        storedetail::PayloadWriter payload(out);
        payload.write(set.grid.level_height_m.data(), set.grid.level_height_m.size());
        payload.write(set.grid.lat_deg.data(), set.grid.lat_deg.size());
        payload.write(set.grid.lon_deg.data(), set.grid.lon_deg.size());
        payload.write(set.coeffs.data(), set.coeffs.size());
        payload.write(set.alpha.data(), set.alpha.size());
        payload.write(set.x_mean.data(), set.x_mean.size());
        payload.write(set.x_std.data(), set.x_std.size());
        payload.write(set.y_mean.data(), set.y_mean.size());
        payload.write(set.y_std.data(), set.y_std.size());
        payload.write(set.cap_values.data(), set.cap_values.size());

        unsigned char trailer[8];
        storedetail::encode_u64(payload.checksum(), trailer);
        out.write(reinterpret_cast<const char*>(trailer), sizeof(trailer));
    });
}

inline CoefficientSet read_coefficients(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw StoreError(StoreErr::io, "cannot open: " + path.string());
    }
    unsigned char header[8 + 6 * 4];
    in.read(reinterpret_cast<char*>(header), sizeof(header));
    if (!in) {
        throw StoreError(StoreErr::bad_length, "file too short for a header");
    }
    if (std::memcmp(header, kCoeffMagic, 8) != 0) {
        throw StoreError(StoreErr::bad_magic, "not a coefficient container");
    }
    const std::uint32_t nlat = storedetail::decode_u32(header + 8);
    const std::uint32_t nlon = storedetail::decode_u32(header + 12);
    const std::uint32_t nlev_out = storedetail::decode_u32(header + 16);
    const std::uint32_t nfeat = storedetail::decode_u32(header + 20);
    const std::uint32_t nlev = storedetail::decode_u32(header + 24);
    const std::uint32_t clim_kind = storedetail::decode_u32(header + 28);
    storedetail::check_dim(nlat, "latitudes");
    storedetail::check_dim(nlon, "longitudes");
    storedetail::check_dim(nlev_out, "output levels");
    storedetail::check_dim(nfeat, "features");
    storedetail::check_dim(nlev, "levels");
    if (nlev_out > nlev || nfeat > nlev) {
        throw StoreError(StoreErr::bad_dimension, "more model levels than grid levels");
    }
    if (clim_kind > 1) {
        throw StoreError(StoreErr::bad_dimension, "unknown climatology kind");
    }
    const std::uint64_t ncols = static_cast<std::uint64_t>(nlat) * nlon;
    const std::uint64_t ncap = nlev - nlev_out;
    const std::uint64_t rows = clim_kind == 0 ? 1 : 366;
    const std::uint64_t nvalues = nlev + nlat + nlon + ncols * nlev_out * nfeat +
                                  ncols * nlev_out + 2 * ncols * nfeat + 2 * ncols * nlev_out +
                                  rows * ncols * ncap;
    if (nvalues > (1ull << 33)) {
        throw StoreError(StoreErr::bad_dimension, "payload would exceed the supported size");
    }
    const std::uint64_t expected = sizeof(header) + nvalues * 8 + 8;
    std::error_code ec;
    const std::uint64_t actual = std::filesystem::file_size(path, ec);
    if (ec) {
        throw StoreError(StoreErr::io, "cannot stat: " + path.string());
    }
    if (actual != expected) {
        throw StoreError(StoreErr::bad_length,
                         "file length " + std::to_string(actual) + " does not match layout " +
                             std::to_string(expected));
    }

    storedetail::PayloadReader payload(in);
    std::vector<double> levels(nlev), lats(nlat), lons(nlon);
    payload.read(levels.data(), levels.size());
    payload.read(lats.data(), lats.size());
    payload.read(lons.data(), lons.size());

    CoefficientSet set;
    set.nlev_out = static_cast<int>(nlev_out);
    set.nfeat = static_cast<int>(nfeat);
    set.cap_kind = clim_kind == 0 ? ClimKind::annual : ClimKind::day_of_year;
    set.coeffs.resize(ncols * nlev_out * nfeat);
    set.alpha.resize(ncols * nlev_out);
    set.x_mean.resize(ncols * nfeat);
    set.x_std.resize(ncols * nfeat);
    set.y_mean.resize(ncols * nlev_out);
    set.y_std.resize(ncols * nlev_out);
    set.cap_values.resize(rows * ncols * ncap);
    payload.read(set.coeffs.data(), set.coeffs.size());
    payload.read(set.alpha.data(), set.alpha.size());
    payload.read(set.x_mean.data(), set.x_mean.size());
    payload.read(set.x_std.data(), set.x_std.size());
    payload.read(set.y_mean.data(), set.y_mean.size());
    payload.read(set.y_std.data(), set.y_std.size());
    payload.read(set.cap_values.data(), set.cap_values.size());

    unsigned char trailer[8];
    in.read(reinterpret_cast<char*>(trailer), sizeof(trailer));
    if (!in) {
        throw StoreError(StoreErr::bad_length, "missing checksum trailer");
    }
    if (storedetail::decode_u64(trailer) != payload.checksum()) {
        throw StoreError(StoreErr::bad_checksum, "payload checksum mismatch");
    }

    set.grid = storedetail::grid_from_payload(std::move(lats), std::move(lons), std::move(levels));
    try {
        set.validate();
    } catch (const StoreError&) {
        throw;
    } catch (const Error& e) {
        throw StoreError(StoreErr::bad_value, e.what());
    }
    return set;
}

inline void write_fields(const FieldSeries& s, const std::filesystem::path& path) {
    require(s.data.size() == static_cast<std::size_t>(s.ntime) * s.grid.npoints(), Errc::data,
            "series payload size does not match its grid and time axis");
    storedetail::atomic_write(path, [&](std::ofstream& out) {
        unsigned char header[8 + 6 * 4];
        std::memcpy(header, kFieldMagic, 8);
        storedetail::encode_u32(static_cast<std::uint32_t>(s.ntime), header + 8);
        storedetail::encode_u32(static_cast<std::uint32_t>(s.grid.nlat()), header + 12);
        storedetail::encode_u32(static_cast<std::uint32_t>(s.grid.nlon()), header + 16);
        storedetail::encode_u32(static_cast<std::uint32_t>(s.grid.nlev()), header + 20);
        storedetail::encode_u32(static_cast<std::uint32_t>(s.var), header + 24);
        storedetail::encode_u32(static_cast<std::uint32_t>(s.spinup_days), header + 28);
        out.write(reinterpret_cast<const char*>(header), sizeof(header));

        storedetail::PayloadWriter payload(out);
        payload.write(s.grid.level_height_m.data(), s.grid.level_height_m.size());
        payload.write(s.grid.lat_deg.data(), s.grid.lat_deg.size());
        payload.write(s.grid.lon_deg.data(), s.grid.lon_deg.size());
        payload.write(s.data.data(), s.data.size());

        unsigned char trailer[8];
        storedetail::encode_u64(payload.checksum(), trailer);
        out.write(reinterpret_cast<const char*>(trailer), sizeof(trailer));
    });
}

inline FieldSeries read_fields(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw StoreError(StoreErr::io, "cannot open: " + path.string());
    }
    unsigned char header[8 + 6 * 4];
    in.read(reinterpret_cast<char*>(header), sizeof(header));
    if (!in) {
        throw StoreError(StoreErr::bad_length, "file too short for a header");
    }
    if (std::memcmp(header, kFieldMagic, 8) != 0) {
        throw StoreError(StoreErr::bad_magic, "not a field container");
    }
    const std::uint32_t ntime = storedetail::decode_u32(header + 8);
    const std::uint32_t nlat = storedetail::decode_u32(header + 12);
    const std::uint32_t nlon = storedetail::decode_u32(header + 16);
    const std::uint32_t nlev = storedetail::decode_u32(header + 20);
    const std::uint32_t var = storedetail::decode_u32(header + 24);
    const std::uint32_t spinup = storedetail::decode_u32(header + 28);
    storedetail::check_dim(ntime, "time steps");
    storedetail::check_dim(nlat, "latitudes");
    storedetail::check_dim(nlon, "longitudes");
    storedetail::check_dim(nlev, "levels");
    if (var > 1) {
        throw StoreError(StoreErr::bad_dimension, "unknown variable code");
    }
    if (spinup >= ntime) {
        throw StoreError(StoreErr::bad_dimension, "spinup window swallows the whole series");
    }
    const std::uint64_t nvalues = static_cast<std::uint64_t>(nlev) + nlat + nlon +
                                  static_cast<std::uint64_t>(ntime) * nlat * nlon * nlev;
    if (nvalues > (1ull << 33)) {
        throw StoreError(StoreErr::bad_dimension, "payload would exceed the supported size");
    }
    const std::uint64_t expected = sizeof(header) + nvalues * 8 + 8;
    std::error_code ec;
    const std::uint64_t actual = std::filesystem::file_size(path, ec);
    if (ec) {
        throw StoreError(StoreErr::io, "cannot stat: " + path.string());
    }
    if (actual != expected) {
        throw StoreError(StoreErr::bad_length,
                         "file length " + std::to_string(actual) + " does not match layout " +
                             std::to_string(expected));
    }

    storedetail::PayloadReader payload(in);
    std::vector<double> levels(nlev), lats(nlat), lons(nlon);
    payload.read(levels.data(), levels.size());
    payload.read(lats.data(), lats.size());
    payload.read(lons.data(), lons.size());
    std::vector<double> data(static_cast<std::size_t>(ntime) * nlat * nlon * nlev);
    payload.read(data.data(), data.size());

    unsigned char trailer[8];
    in.read(reinterpret_cast<char*>(trailer), sizeof(trailer));
    if (!in) {
        throw StoreError(StoreErr::bad_length, "missing checksum trailer");
    }
    if (storedetail::decode_u64(trailer) != payload.checksum()) {
        throw StoreError(StoreErr::bad_checksum, "payload checksum mismatch");
    }

    FieldSeries s;
    s.grid = storedetail::grid_from_payload(std::move(lats), std::move(lons), std::move(levels));
    s.var = var == 0 ? VarKind::temperature_K : VarKind::ozone_vmr;
    s.ntime = static_cast<int>(ntime);
    s.spinup_days = static_cast<int>(spinup);
    s.data = std::move(data);
    for (double v : s.data) {
        if (!std::isfinite(v)) {
            throw StoreError(StoreErr::bad_value, "non-finite value in field payload");
        }
    }
    return s;
}

}  // namespace mloz
