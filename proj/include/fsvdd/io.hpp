#pragma once

#include "fsvdd/error.hpp"
#include "fsvdd/focus_svdd.hpp"
#include "fsvdd/nn/autoencoder.hpp"
#include "fsvdd/signal_repr.hpp"
#include "fsvdd/svdd.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace fsvdd::io {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// Numbers and hashing

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, size_t row, size_t col) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw DataError("csv: bad number '" + std::string(s) + "' at row " + std::to_string(row + 1) + ", column " +
                        std::to_string(col + 1));
    return v;
}

inline std::string sha256_hex(std::string_view bytes) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
        throw Error("sha256: digest failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 15]);
    }
    return out;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed for '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// CSV rows

/// One row per line, comma-separated. Blank lines are skipped; all rows
/// must have the same width.
inline std::vector<std::vector<double>> parse_csv_rows(std::string_view text) {
    std::vector<std::vector<double>> rows;
    size_t pos = 0;
    while (pos < text.size()) {
        size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        std::vector<double> row;
        size_t start = 0;
        for (;;) {
            const size_t comma = line.find(',', start);
            const auto field = line.substr(start, comma == std::string_view::npos ? line.size() - start : comma - start);
            row.push_back(parse_double(field, rows.size(), row.size()));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw DataError("csv: row " + std::to_string(rows.size() + 1) + " has " + std::to_string(row.size()) +
                            " columns, expected " + std::to_string(rows.front().size()));
        rows.push_back(std::move(row));
    }
    return rows;
}

template <Field T>
std::string format_csv_row(const Vector<T>& v) {
    std::string line;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i > 0) line.push_back(',');
        if constexpr (is_complex_v<T>) {
            line += format_double(v[i].real());
            line.push_back(',');
            line += format_double(v[i].imag());
        } else {
            line += format_double(v[i]);
        }
    }
    line.push_back('\n');
    return line;
}

// ---------------------------------------------------------------------------
// Datasets: samples CSV plus JSON-lines metadata {id, label, fold, meta}

inline std::string format_meta_line(const IFSignal& s, size_t index) {
    Json j;
    auto id = s.meta.find("id");
    j["id"] = id != s.meta.end() ? id->second : "row" + std::to_string(index);
    j["label"] = std::string(to_string(s.label));
    auto fold = s.meta.find("fold");
    if (fold != s.meta.end()) {
        j["fold"] = std::stoi(fold->second);
    } else {
        j["fold"] = nullptr;
    }
    Json meta = Json::object();
    for (const auto& [k, v] : s.meta)
        if (k != "id" && k != "fold") meta[k] = v;
    j["meta"] = meta;
    return j.dump() + "\n";
}

struct DatasetText {
    std::string samples;
    std::string meta;
};

inline DatasetText format_dataset(std::span<const IFSignal> signals) {
    DatasetText out;
    for (size_t i = 0; i < signals.size(); ++i) {
        out.samples += format_csv_row<double>(signals[i].samples);
        out.meta += format_meta_line(signals[i], i);
    }
    return out;
}

/// Interleaved (re, im) rows of the analytic signal of each sample.
inline std::string format_analytic_dataset(std::span<const IFSignal> signals) {
    std::string out;
    for (const auto& s : signals) out += format_csv_row<Complex>(analytic(s).samples);
    return out;
}

inline void apply_meta_line(IFSignal& s, std::string_view line, size_t row) {
    Json j;
    try {
        j = Json::parse(line);
    } catch (const Json::exception& e) {
        throw DataError("meta: line " + std::to_string(row + 1) + ": " + e.what());
    }
    if (!j.is_object()) throw DataError("meta: line " + std::to_string(row + 1) + " is not an object");
    if (j.contains("meta")) {
        if (!j["meta"].is_object()) throw DataError("meta: 'meta' must be an object");
        for (const auto& [k, v] : j["meta"].items()) s.meta[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
    if (j.contains("id")) s.meta["id"] = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
    if (j.contains("label")) s.label = label_from_string(j["label"].get<std::string>());
    if (j.contains("fold") && !j["fold"].is_null()) s.meta["fold"] = std::to_string(j["fold"].get<int>());
}

/// Raw rows of the samples file (L columns, or 2L for analytic files) and
/// their metadata; rows without a metadata file get id "row<i>", label
/// unknown.
struct RawDataset {
    std::vector<std::vector<double>> rows;
    std::vector<IFSignal> headers;  // label and meta only
};

inline RawDataset parse_dataset(std::string_view samples, std::optional<std::string_view> meta) {
    RawDataset ds;
    ds.rows = parse_csv_rows(samples);
    ds.headers.resize(ds.rows.size());
    for (size_t i = 0; i < ds.headers.size(); ++i) ds.headers[i].meta["id"] = "row" + std::to_string(i);
    if (meta) {
        size_t row = 0, pos = 0;
        while (pos < meta->size()) {
            size_t end = meta->find('\n', pos);
            if (end == std::string_view::npos) end = meta->size();
            const auto line = meta->substr(pos, end - pos);
            pos = end + 1;
            if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
            if (row >= ds.rows.size()) throw DataError("meta: more metadata lines than samples");
            apply_meta_line(ds.headers[row], line, row);
            ++row;
        }
        if (row != ds.rows.size()) throw DataError("meta: fewer metadata lines than samples");
    }
    return ds;
}

inline std::vector<IFSignal> to_signals(RawDataset ds) {
    std::vector<IFSignal> out(ds.rows.size());
    for (size_t i = 0; i < ds.rows.size(); ++i) {
        out[i] = std::move(ds.headers[i]);
        out[i].samples = Eigen::Map<const RealVector>(ds.rows[i].data(), static_cast<Eigen::Index>(ds.rows[i].size()));
        if (!out[i].samples.allFinite()) throw DataError("dataset: non-finite sample in row " + std::to_string(i + 1));
    }
    return out;
}

inline std::vector<ComplexVector> to_analytic_rows(const RawDataset& ds) {
    std::vector<ComplexVector> out;
    for (const auto& row : ds.rows) {
        if (row.size() % 2 != 0) throw DataError("analytic dataset: odd column count");
        ComplexVector v(static_cast<Eigen::Index>(row.size() / 2));
        for (Eigen::Index k = 0; k < v.size(); ++k)
            v[k] = Complex(row[static_cast<size_t>(2 * k)], row[static_cast<size_t>(2 * k + 1)]);
        if (!v.allFinite()) throw DataError("analytic dataset: non-finite sample");
        out.push_back(std::move(v));
    }
    return out;
}

/// The companion metadata file of `samples.csv` is `samples.meta.jsonl`.
inline std::filesystem::path meta_path_for(const std::filesystem::path& samples) {
    auto p = samples;
    p.replace_extension(".meta.jsonl");
    return p;
}

inline RawDataset load_dataset(const std::filesystem::path& samples) {
    const std::string text = read_file(samples);
    const auto meta = meta_path_for(samples);
    if (std::filesystem::exists(meta)) {
        const std::string m = read_file(meta);
        return parse_dataset(text, std::string_view(m));
    }
    return parse_dataset(text, std::nullopt);
}

inline std::vector<IFSignal> load_signals(const std::filesystem::path& samples) {
    return to_signals(load_dataset(samples));
}

// ---------------------------------------------------------------------------
// JSON documents

inline Json to_json(const Standardizer& s) {
    Json j{{"mean", s.mean}, {"std", s.std}};
    if (s.per_bin()) {
        j["bin_mean"] = std::vector<double>(s.bin_mean.begin(), s.bin_mean.end());
        j["bin_std"] = std::vector<double>(s.bin_std.begin(), s.bin_std.end());
    }
    return j;
}

inline Standardizer standardizer_from_json(const Json& j) {
    Standardizer s;
    s.mean = j.at("mean").get<double>();
    s.std = j.at("std").get<double>();
    if (j.contains("bin_mean")) {
        const auto m = j.at("bin_mean").get<std::vector<double>>();
        const auto d = j.at("bin_std").get<std::vector<double>>();
        if (m.size() != d.size()) throw DataError("standardizer: bin_mean and bin_std differ in length");
        s.bin_mean = Eigen::Map<const RealVector>(m.data(), static_cast<Eigen::Index>(m.size()));
        s.bin_std = Eigen::Map<const RealVector>(d.data(), static_cast<Eigen::Index>(d.size()));
    }
    validate(s);
    return s;
}

template <Field T>
constexpr std::string_view field_name() {
    return is_complex_v<T> ? "complex" : "real";
}

namespace detail {

template <Field T, class Part>
Json matrix_part(const Matrix<T>& m, Part part) {
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        std::vector<double> row(static_cast<size_t>(m.cols()));
        for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<size_t>(c)] = part(m(r, c));
        rows.push_back(row);
    }
    return rows;
}

inline double re(double v) { return v; }
inline double im(double) { return 0.0; }
inline double re(const Complex& v) { return v.real(); }
inline double im(const Complex& v) { return v.imag(); }

inline std::vector<std::vector<double>> get_matrix(const Json& j, const char* key, Eigen::Index rows,
                                                   Eigen::Index cols) {
    auto m = j.at(key).get<std::vector<std::vector<double>>>();
    if (static_cast<Eigen::Index>(m.size()) != rows) throw DataError(std::string("model: '") + key + "' has wrong row count");
    for (const auto& r : m)
        if (static_cast<Eigen::Index>(r.size()) != cols)
            throw DataError(std::string("model: '") + key + "' has wrong column count");
    return m;
}

inline std::vector<double> get_vector(const Json& j, const char* key, Eigen::Index n) {
    auto v = j.at(key).get<std::vector<double>>();
    if (static_cast<Eigen::Index>(v.size()) != n) throw DataError(std::string("model: '") + key + "' has wrong length");
    return v;
}

}  // namespace detail

template <Field T>
Json to_json(const nn::Autoencoder<T>& ae) {
    Json layers = Json::array();
    for (const auto& layer : ae.layers) {
        Json act{{"kind", std::string(nn::to_string(layer.activation))}};
        if (nn::has_parameter(layer.activation)) {
            if (layer.b.size() == 1) {
                act["b"] = layer.b[0];
            } else {
                act["b"] = std::vector<double>(layer.b.begin(), layer.b.end());
            }
        }
        std::vector<double> bre, bim;
        for (Eigen::Index k = 0; k < layer.bias.size(); ++k) {
            bre.push_back(detail::re(layer.bias[k]));
            bim.push_back(detail::im(layer.bias[k]));
        }
        layers.push_back({{"rows", layer.rows()},
                          {"cols", layer.cols()},
                          {"activation", act},
                          {"weights_re", detail::matrix_part<T>(layer.weights, [](const T& v) { return detail::re(v); })},
                          {"weights_im", detail::matrix_part<T>(layer.weights, [](const T& v) { return detail::im(v); })},
                          {"bias_re", bre},
                          {"bias_im", bim}});
    }
    return Json{{"field", std::string(field_name<T>())}, {"input_dim", ae.input_dim}, {"layers", layers}};
}

inline std::string model_field(const Json& ae_doc) { return ae_doc.value("field", std::string("complex")); }

template <Field T>
nn::Autoencoder<T> autoencoder_from_json(const Json& j) {
    try {
        if (model_field(j) != field_name<T>())
            throw DataError("model: expected a " + std::string(field_name<T>()) + " autoencoder, found " + model_field(j));
        nn::Autoencoder<T> ae;
        ae.input_dim = j.at("input_dim").get<Eigen::Index>();
        for (const auto& lj : j.at("layers")) {
            nn::DenseLayer<T> layer;
            const auto rows = lj.at("rows").get<Eigen::Index>();
            const auto cols = lj.at("cols").get<Eigen::Index>();
            if (rows < 1 || cols < 1) throw DataError("model: layer shape must be positive");
            const auto wre = detail::get_matrix(lj, "weights_re", rows, cols);
            const auto wim = detail::get_matrix(lj, "weights_im", rows, cols);
            const auto bre = detail::get_vector(lj, "bias_re", rows);
            const auto bim = detail::get_vector(lj, "bias_im", rows);
            layer.weights.resize(rows, cols);
            layer.bias.resize(rows);
            for (Eigen::Index r = 0; r < rows; ++r) {
                const auto ur = static_cast<size_t>(r);
                for (Eigen::Index c = 0; c < cols; ++c) {
                    const auto uc = static_cast<size_t>(c);
                    if constexpr (is_complex_v<T>) {
                        layer.weights(r, c) = Complex(wre[ur][uc], wim[ur][uc]);
                    } else {
                        if (wim[ur][uc] != 0.0) throw DataError("model: real autoencoder with imaginary weights");
                        layer.weights(r, c) = wre[ur][uc];
                    }
                }
                if constexpr (is_complex_v<T>) {
                    layer.bias[r] = Complex(bre[ur], bim[ur]);
                } else {
                    if (bim[ur] != 0.0) throw DataError("model: real autoencoder with imaginary bias");
                    layer.bias[r] = bre[ur];
                }
            }
            const auto& act = lj.at("activation");
            layer.activation = nn::activation_from_string(act.at("kind").get<std::string>());
            if (nn::has_parameter(layer.activation)) {
                const auto& b = act.at("b");
                if (b.is_array()) {
                    const auto v = b.get<std::vector<double>>();
                    if (static_cast<Eigen::Index>(v.size()) != rows) throw DataError("model: per-node b has wrong length");
                    layer.b = Eigen::Map<const RealVector>(v.data(), rows);
                } else {
                    layer.b = RealVector::Constant(1, b.get<double>());
                }
            }
            if (!layer.weights.allFinite() || !layer.bias.allFinite() || !layer.b.allFinite())
                throw DataError("model: non-finite parameter");
            ae.layers.push_back(std::move(layer));
        }
        nn::validate(ae);
        return ae;
    } catch (const Json::exception& e) {
        throw DataError(std::string("model: ") + e.what());
    }
}

template <Field T>
Json to_json(const svdd::SvddModel<T>& m, Representation rep) {
    Json svs = Json::array();
    for (const auto& sv : m.support_vectors) {
        std::vector<double> row;
        for (Eigen::Index k = 0; k < sv.size(); ++k) {
            row.push_back(detail::re(sv[k]));
            if constexpr (is_complex_v<T>) row.push_back(detail::im(sv[k]));
        }
        svs.push_back(row);
    }
    Json j{{"field", std::string(field_name<T>())},
           {"gamma", m.gamma},
           {"C", m.C},
           {"density_limit", m.density_limit},
           {"alpha", std::vector<double>(m.alpha.begin(), m.alpha.end())},
           {"support_vectors", svs},
           {"representation_tag", std::string(to_string(rep))}};
    if (m.corrected_limit) j["corrected_limit"] = *m.corrected_limit;
    return j;
}

template <Field T>
svdd::SvddModel<T> svdd_from_json(const Json& j) {
    try {
        if (j.value("field", std::string(field_name<T>())) != field_name<T>())
            throw DataError("svdd model: field mismatch");
        svdd::SvddModel<T> m;
        m.gamma = j.at("gamma").get<double>();
        m.C = j.at("C").get<double>();
        m.density_limit = j.at("density_limit").get<double>();
        if (j.contains("corrected_limit")) m.corrected_limit = j.at("corrected_limit").get<double>();
        const auto alpha = j.at("alpha").get<std::vector<double>>();
        m.alpha = Eigen::Map<const Eigen::VectorXd>(alpha.data(), static_cast<Eigen::Index>(alpha.size()));
        for (const auto& row : j.at("support_vectors").get<std::vector<std::vector<double>>>()) {
            if constexpr (is_complex_v<T>) {
                if (row.size() % 2 != 0) throw DataError("svdd model: odd interleaved support vector");
                ComplexVector v(static_cast<Eigen::Index>(row.size() / 2));
                for (Eigen::Index k = 0; k < v.size(); ++k)
                    v[k] = Complex(row[static_cast<size_t>(2 * k)], row[static_cast<size_t>(2 * k + 1)]);
                m.support_vectors.push_back(std::move(v));
            } else {
                m.support_vectors.push_back(Eigen::Map<const RealVector>(row.data(), static_cast<Eigen::Index>(row.size())));
            }
        }
        svdd::validate(m);
        return m;
    } catch (const Json::exception& e) {
        throw DataError(std::string("svdd model: ") + e.what());
    }
}

inline Representation representation_tag(const Json& j) {
    return representation_from_string(j.at("representation_tag").get<std::string>());
}

inline Json load_json(const std::filesystem::path& path) {
    const auto text = read_file(path);
    try {
        return Json::parse(text);
    } catch (const Json::exception& e) {
        throw DataError("'" + path.string() + "': " + e.what());
    }
}

/// Two-space indented document with a trailing newline.
inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace fsvdd::io
