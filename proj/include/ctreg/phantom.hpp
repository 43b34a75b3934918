#pragma once

// Random-ellipse phantoms and the persisted train/validation/test dataset.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "error.hpp"
#include "geometry.hpp"
#include "rng.hpp"

namespace ctreg {

/// Ellipse in unit-square coordinates (x to the right, y up).
struct EllipseSpec {
    double cx = 0.5, cy = 0.5;
    double a = 0.25, b = 0.25;  ///< semi-axes along the rotated x / y axes
    double rotation = 0.0;      ///< radians, [0, pi)
    double intensity = 1.0;

    /// Half extents of the axis-aligned bounding box; the four extremal
    /// points of the ellipse sit at center +- these.
    std::pair<double, double> half_extent() const {
        const double c = std::cos(rotation), s = std::sin(rotation);
        return {std::sqrt(a * a * c * c + b * b * s * s), std::sqrt(a * a * s * s + b * b * c * c)};
    }

    bool contained() const {
        const auto [hx, hy] = half_extent();
        return cx - hx >= 0.0 && cx + hx <= 1.0 && cy - hy >= 0.0 && cy + hy <= 1.0;
    }

    bool covers(double x, double y) const {
        const double c = std::cos(rotation), s = std::sin(rotation);
        const double dx = x - cx, dy = y - cy;
        const double xr = dx * c + dy * s;
        const double yr = -dx * s + dy * c;
        return (xr * xr) / (a * a) + (yr * yr) / (b * b) <= 1.0;
    }
};

/// Sampling ranges. Ellipse centers sit on a circle around (0.5, 0.5) of
/// random radius, at independent uniform angles.
struct GeneratorParams {
    int min_ellipses = 3;
    int max_ellipses = 8;
    double min_radius = 0.15, max_radius = 0.35;
    double min_axis = 0.05, max_axis = 0.20;
    double min_rotation = 0.0, max_rotation = std::numbers::pi;
    double min_intensity = 0.2, max_intensity = 1.0;
    int max_attempts = 1000;  ///< containment rejection budget per ellipse

    void validate() const {
        auto range = [](double lo, double hi, const char* name) {
            if (!(lo <= hi)) throw ConfigError(std::string("empty sampling range for ") + name);
        };
        if (min_ellipses < 0 || min_ellipses > max_ellipses) throw ConfigError("empty sampling range for ellipse count");
        range(min_radius, max_radius, "radius");
        range(min_axis, max_axis, "semi-axes");
        range(min_rotation, max_rotation, "rotation");
        range(min_intensity, max_intensity, "intensity");
        if (min_axis <= 0.0) throw ConfigError("semi-axes must be > 0");
        if (min_radius < 0.0) throw ConfigError("radius must be >= 0");
        if (max_attempts < 1) throw ConfigError("max_attempts must be >= 1");
    }

    bool operator==(const GeneratorParams&) const = default;
};

/// Point-sampled rasterization: pixel = clamp(sum of intensities of ellipses
/// covering the pixel center, 0, 1).
inline Image rasterize(const std::vector<EllipseSpec>& ellipses, int size) {
    Image img(size);
    for (int r = 0; r < size; ++r) {
        const double y = (r + 0.5) / size;
        for (int c = 0; c < size; ++c) {
            const double x = (c + 0.5) / size;
            double v = 0.0;
            for (const auto& e : ellipses)
                if (e.covers(x, y)) v += e.intensity;
            img.at(r, c) = std::clamp(v, 0.0, 1.0);
        }
    }
    return img;
}

/// Draws the ellipse list for one phantom. Draw order per ellipse: radius,
/// angle, a, b, rotation, intensity; the whole tuple is redrawn until the
/// ellipse is contained in the unit square.
inline std::vector<EllipseSpec> sample_ellipses(std::uint64_t seed, const GeneratorParams& params) {
    params.validate();
    Xoshiro256 rng(seed);
    const int count = rng.uniform_int(params.min_ellipses, params.max_ellipses);
    std::vector<EllipseSpec> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        bool placed = false;
        for (int attempt = 0; attempt < params.max_attempts && !placed; ++attempt) {
            const double radius = rng.uniform(params.min_radius, params.max_radius);
            const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
            EllipseSpec e;
            e.cx = 0.5 + radius * std::cos(angle);
            e.cy = 0.5 + radius * std::sin(angle);
            e.a = rng.uniform(params.min_axis, params.max_axis);
            e.b = rng.uniform(params.min_axis, params.max_axis);
            e.rotation = rng.uniform(params.min_rotation, params.max_rotation);
            e.intensity = rng.uniform(params.min_intensity, params.max_intensity);
            if (e.contained()) {
                out.push_back(e);
                placed = true;
            }
        }
        if (!placed) throw ConfigError("could not place a contained ellipse; sampling ranges too wide");
    }
    return out;
}

inline Image generate_phantom(std::uint64_t seed, const GeneratorParams& params, int size) {
    if (size < 4) throw ConfigError("phantom size must be >= 4");
    return rasterize(sample_ellipses(seed, params), size);
}

struct SplitFractions {
    double train = 0.64, validation = 0.16, test = 0.20;
    bool operator==(const SplitFractions&) const = default;
};

struct DatasetManifest {
    std::uint64_t seed = 0;
    int count = 2000;
    SplitFractions split;
    int image_size = 32;
    GeneratorParams generator;

    void validate() const {
        if (count < 1) throw ConfigError("dataset count must be >= 1");
        if (image_size < 4) throw ConfigError("image_size must be >= 4");
        if (split.train < 0 || split.validation < 0 || split.test < 0)
            throw ConfigError("split fractions must be non-negative");
        if (std::abs(split.train + split.validation + split.test - 1.0) > 1e-9)
            throw ConfigError("split fractions must sum to 1");
        generator.validate();
    }
    bool operator==(const DatasetManifest&) const = default;
};

struct SplitSizes {
    int train = 0, validation = 0, test = 0;
    bool operator==(const SplitSizes&) const = default;
};

/// validation = round(f_val * count), test = round(f_test * count) (half away
/// from zero, test capped by what is left), train takes the remainder.
inline SplitSizes split_sizes(int count, const SplitFractions& f) {
    SplitSizes s;
    s.validation = std::min(count, static_cast<int>(std::llround(f.validation * count)));
    s.test = std::min(count - s.validation, static_cast<int>(std::llround(f.test * count)));
    s.train = count - s.validation - s.test;
    return s;
}

inline constexpr const char* kSplitRule =
    "validation=round(f_val*count), test=round(f_test*count), train=remainder; "
    "indices are contiguous in the order train, validation, test";

/// Ordered images (one column per image) plus contiguous split ranges.
struct Dataset {
    DatasetManifest manifest;
    Eigen::MatrixXd images;  ///< I^2 x count
    SplitSizes sizes;

    int size() const { return static_cast<int>(images.cols()); }
    Image image(int index) const { return Image(manifest.image_size, images.col(index)); }

    std::vector<int> train_indices() const { return iota(0, sizes.train); }
    std::vector<int> validation_indices() const { return iota(sizes.train, sizes.validation); }
    std::vector<int> test_indices() const { return iota(sizes.train + sizes.validation, sizes.test); }

    auto train() const { return images.middleCols(0, sizes.train); }
    auto validation() const { return images.middleCols(sizes.train, sizes.validation); }
    auto test() const { return images.middleCols(sizes.train + sizes.validation, sizes.test); }

private:
    static std::vector<int> iota(int start, int n) {
        std::vector<int> v(n);
        for (int i = 0; i < n; ++i) v[i] = start + i;
        return v;
    }
};

/// Image i uses the stream derive_seed(seed, phantom, i).
inline Dataset generate_dataset(const DatasetManifest& manifest) {
    manifest.validate();
    Dataset ds;
    ds.manifest = manifest;
    ds.sizes = split_sizes(manifest.count, manifest.split);
    const auto npix = static_cast<Eigen::Index>(manifest.image_size) * manifest.image_size;
    ds.images.resize(npix, manifest.count);
    for (int i = 0; i < manifest.count; ++i) {
        const auto seed = derive_seed(manifest.seed, stream_tag::phantom, static_cast<std::uint64_t>(i));
        ds.images.col(i) = generate_phantom(seed, manifest.generator, manifest.image_size).pixels;
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Persistence: manifest.json + train.f64 / val.f64 / test.f64

inline nlohmann::ordered_json to_json(const GeneratorParams& p) {
    return {{"min_ellipses", p.min_ellipses}, {"max_ellipses", p.max_ellipses},
            {"min_radius", p.min_radius},     {"max_radius", p.max_radius},
            {"min_axis", p.min_axis},         {"max_axis", p.max_axis},
            {"min_rotation", p.min_rotation}, {"max_rotation", p.max_rotation},
            {"min_intensity", p.min_intensity}, {"max_intensity", p.max_intensity},
            {"max_attempts", p.max_attempts}};
}

namespace detail {

template <class T>
T field(const nlohmann::json& j, const std::string& key) {
    if (!j.contains(key)) throw FormatError(key, "missing");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(key, e.what());
    }
}

template <class T>
void optional_field(const nlohmann::json& j, const std::string& key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(key, e.what());
    }
}

}  // namespace detail

inline GeneratorParams generator_params_from_json(const nlohmann::json& j) {
    GeneratorParams p;
    detail::optional_field(j, "min_ellipses", p.min_ellipses);
    detail::optional_field(j, "max_ellipses", p.max_ellipses);
    detail::optional_field(j, "min_radius", p.min_radius);
    detail::optional_field(j, "max_radius", p.max_radius);
    detail::optional_field(j, "min_axis", p.min_axis);
    detail::optional_field(j, "max_axis", p.max_axis);
    detail::optional_field(j, "min_rotation", p.min_rotation);
    detail::optional_field(j, "max_rotation", p.max_rotation);
    detail::optional_field(j, "min_intensity", p.min_intensity);
    detail::optional_field(j, "max_intensity", p.max_intensity);
    detail::optional_field(j, "max_attempts", p.max_attempts);
    return p;
}

inline nlohmann::ordered_json to_json(const DatasetManifest& m) {
    const auto sizes = split_sizes(m.count, m.split);
    nlohmann::ordered_json j;
    j["format"] = "ctreg-dataset/1";
    j["seed"] = m.seed;
    j["count"] = m.count;
    j["image_size"] = m.image_size;
    j["split"] = {{"train", m.split.train}, {"validation", m.split.validation}, {"test", m.split.test}};
    j["split_sizes"] = {{"train", sizes.train}, {"validation", sizes.validation}, {"test", sizes.test}};
    j["split_rule"] = kSplitRule;
    j["generator_params"] = to_json(m.generator);
    j["pixel_format"] = "float64 little-endian, row-major, row 0 at bottom, images concatenated";
    j["files"] = {{"train", "train.f64"}, {"validation", "val.f64"}, {"test", "test.f64"}};
    return j;
}

inline DatasetManifest manifest_from_json(const nlohmann::json& j) {
    DatasetManifest m;
    m.seed = detail::field<std::uint64_t>(j, "seed");
    m.count = detail::field<int>(j, "count");
    m.image_size = detail::field<int>(j, "image_size");
    if (j.contains("split")) {
        const auto& s = j.at("split");
        m.split.train = detail::field<double>(s, "train");
        m.split.validation = detail::field<double>(s, "validation");
        m.split.test = detail::field<double>(s, "test");
    }
    if (j.contains("generator_params")) m.generator = generator_params_from_json(j.at("generator_params"));
    return m;
}

/// Reads only manifest.json; pixel blobs are not touched.
inline DatasetManifest load_manifest(const std::filesystem::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw FormatError("manifest.json", "cannot open " + (dir / "manifest.json").string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("manifest.json", e.what());
    }
    auto m = manifest_from_json(j);
    try {
        m.validate();
    } catch (const ConfigError& e) {
        throw FormatError("manifest.json", e.what());
    }
    if (j.contains("split_sizes")) {
        const auto& s = j.at("split_sizes");
        const SplitSizes declared{detail::field<int>(s, "train"), detail::field<int>(s, "validation"),
                                  detail::field<int>(s, "test")};
        if (!(declared == split_sizes(m.count, m.split)))
            throw FormatError("split_sizes", "inconsistent with count and split fractions");
    }
    return m;
}

namespace detail {

inline void write_f64(const std::filesystem::path& path, const double* data, std::size_t n) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError(path.filename().string(), "cannot open for writing");
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            auto bits = std::bit_cast<std::uint64_t>(data[i]);
            char b[8];
            for (int k = 0; k < 8; ++k) b[k] = static_cast<char>((bits >> (8 * k)) & 0xff);
            out.write(b, 8);
        }
    }
    if (!out) throw FormatError(path.filename().string(), "write failed");
}

inline void read_f64(const std::filesystem::path& path, double* data, std::size_t n, const std::string& size_field) {
    std::error_code ec;
    const auto bytes = std::filesystem::file_size(path, ec);
    if (ec) throw FormatError(path.filename().string(), "cannot stat: " + ec.message());
    if (bytes != n * sizeof(double))
        throw FormatError(size_field, path.filename().string() + " holds " + std::to_string(bytes) +
                                          " bytes, manifest implies " + std::to_string(n * sizeof(double)));
    std::ifstream in(path, std::ios::binary);
    std::vector<unsigned char> buf(bytes);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(bytes));
    if (!in) throw FormatError(path.filename().string(), "short read");
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t bits = 0;
        for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(buf[8 * i + k]) << (8 * k);
        data[i] = std::bit_cast<double>(bits);
    }
}

}  // namespace detail

inline void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "manifest.json");
        if (!out) throw FormatError("manifest.json", "cannot open for writing");
        out << to_json(ds.manifest).dump(2) << "\n";
    }
    const auto npix = static_cast<std::size_t>(ds.images.rows());
    const int offsets[3] = {0, ds.sizes.train, ds.sizes.train + ds.sizes.validation};
    const int counts[3] = {ds.sizes.train, ds.sizes.validation, ds.sizes.test};
    const char* names[3] = {"train.f64", "val.f64", "test.f64"};
    for (int s = 0; s < 3; ++s)
        detail::write_f64(dir / names[s], ds.images.data() + npix * offsets[s], npix * counts[s]);
}

inline Dataset load_dataset(const std::filesystem::path& dir) {
    Dataset ds;
    ds.manifest = load_manifest(dir);
    ds.sizes = split_sizes(ds.manifest.count, ds.manifest.split);
    const auto npix = static_cast<std::size_t>(ds.manifest.image_size) * ds.manifest.image_size;
    ds.images.resize(static_cast<Eigen::Index>(npix), ds.manifest.count);
    const int offsets[3] = {0, ds.sizes.train, ds.sizes.train + ds.sizes.validation};
    const int counts[3] = {ds.sizes.train, ds.sizes.validation, ds.sizes.test};
    const char* names[3] = {"train.f64", "val.f64", "test.f64"};
    for (int s = 0; s < 3; ++s)
        detail::read_f64(dir / names[s], ds.images.data() + npix * offsets[s], npix * counts[s], "image_size");
    return ds;
}

}  // namespace ctreg
