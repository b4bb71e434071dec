#include "smartseq/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace smartseq {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double median(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("median: empty input");
    std::vector<double> v(values.begin(), values.end());
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
        m = 0.5 * (m + v[mid - 1]);
    }
    return m;
}

double mad_scale(std::span<const double> values) {
    const double m = median(values);
    std::vector<double> dev(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) dev[i] = std::fabs(values[i] - m);
    return 1.4826 * median(dev);
}

double top_fraction_mean(std::span<const double> values, double fraction) {
    if (values.empty()) throw std::invalid_argument("top_fraction_mean: empty input");
    const auto n = static_cast<std::size_t>(
        std::min<double>(static_cast<double>(values.size()),
                         std::max(1.0, std::ceil(fraction * static_cast<double>(values.size())))));
    std::vector<double> v(values.begin(), values.end());
    std::nth_element(v.begin(), v.begin() + (v.size() - n), v.end());
    double sum = 0.0;
    for (std::size_t i = v.size() - n; i < v.size(); ++i) sum += v[i];
    return sum / static_cast<double>(n);
}

std::vector<double> compute_z_scores(const PilotDataset& data) {
    if (data.p() < 1) throw std::invalid_argument("compute_z_scores: empty dataset");
    const std::size_t m = data.values.front().size();
    if (m == 0) throw std::invalid_argument("compute_z_scores: location with no measurements");
    for (const auto& row : data.values)
        if (row.size() != m)
            throw std::invalid_argument("compute_z_scores: unequal replicate counts");

    const int p = data.p();
    std::vector<double> means(p);
    for (int i = 0; i < p; ++i) {
        double s = 0.0;
        for (const double x : data.values[i]) s += x;
        means[i] = s / static_cast<double>(m);
    }

    if (m == 1) {  // no replicate variance; fall back to MAD standardization
        const double center = median(means);
        const double scale = mad_scale(means);
        if (scale <= 0.0) {
            if (std::all_of(means.begin(), means.end(), [&](double v) { return v == center; }) &&
                center == 0.0)
                return std::vector<double>(p, 0.0);
            throw DegenerateDataError("compute_z_scores: zero spread in single-replicate data");
        }
        std::vector<double> z(p);
        for (int i = 0; i < p; ++i) z[i] = means[i] / scale;
        return z;
    }

    double pooled_ss = 0.0;
    for (int i = 0; i < p; ++i)
        for (const double x : data.values[i]) pooled_ss += (x - means[i]) * (x - means[i]);
    const double pooled_var = pooled_ss / (static_cast<double>(p) * static_cast<double>(m - 1));
    if (pooled_var <= 0.0) {
        if (std::all_of(means.begin(), means.end(), [](double v) { return v == 0.0; }))
            return std::vector<double>(p, 0.0);
        throw DegenerateDataError("compute_z_scores: zero pooled replicate variance");
    }
    const double se = std::sqrt(pooled_var / static_cast<double>(m));
    std::vector<double> z(p);
    for (int i = 0; i < p; ++i) z[i] = means[i] / se;
    return z;
}

EmpiricalNullFit fit_empirical_null(std::span<const double> z, double c) {
    if (z.size() < 100)
        throw std::invalid_argument("fit_empirical_null: need at least 100 locations");
    if (!(c > 0.0)) throw std::invalid_argument("fit_empirical_null: c must be positive");

    EmpiricalNullFit fit;
    fit.mu0_hat = median(z);
    fit.sigma0_hat = mad_scale(z);
    if (fit.sigma0_hat <= 0.0)
        throw DegenerateDataError("fit_empirical_null: zero MAD, degenerate data");

    const double q_c = 2.0 * (1.0 - normal_cdf(c));  // two-sided normal tail beyond c
    long long exceed = 0;
    for (const double v : z)
        if (std::fabs(v - fit.mu0_hat) > c * fit.sigma0_hat) ++exceed;
    const double frac = static_cast<double>(exceed) / static_cast<double>(z.size());
    const double raw = (frac - q_c) / (1.0 - q_c);
    fit.pi_hat = std::max(kPiHatFloor, raw);
    fit.pi_at_floor = raw < kPiHatFloor;
    fit.pi_hat = std::min(fit.pi_hat, 1.0 - 1e-6);
    fit.mu_signal_hat = top_fraction_mean(z, fit.pi_hat);
    return fit;
}

SemisyntheticModel build_semisynthetic_model(const EmpiricalNullFit& fit, int p) {
    if (!(fit.pi_hat > 0.0))
        throw std::invalid_argument("build_semisynthetic_model: pi_hat must be positive");
    if (!(fit.sigma0_hat > 0.0))
        throw std::invalid_argument("build_semisynthetic_model: sigma0_hat must be positive");
    SemisyntheticModel out{
        MixtureModel(p, fit.pi_hat, fit.mu0_hat, fit.sigma0_hat,
                     AltMeans::constant(fit.mu_signal_hat), /*alt_prior_sd=*/0.0),
        fit.pi_at_floor};
    return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    return fields;
}

}  // namespace

PilotDataset load_delimited_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_delimited_table: cannot open " + path);
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("load_delimited_table: empty file " + path);
    const auto header = split_csv_line(line);
    if (header.empty() || header.front() != "location_id")
        throw std::runtime_error("load_delimited_table: header must start with location_id");

    PilotDataset data;
    data.source = PilotDataset::Source::kDelimitedTable;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw std::runtime_error("load_delimited_table: ragged row in " + path);
        std::vector<double> row;
        row.reserve(fields.size() - 1);
        for (std::size_t k = 1; k < fields.size(); ++k) row.push_back(std::stod(fields[k]));
        data.values.push_back(std::move(row));
    }
    if (data.values.empty()) throw std::runtime_error("load_delimited_table: no data rows");
    return data;
}

namespace {

// Reads the next graymap header token, skipping whitespace and '#' comments.
std::string next_pnm_token(std::istream& in) {
    std::string token;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {
            }
            continue;
        }
        if (std::isspace(ch)) {
            if (!token.empty()) return token;
            continue;
        }
        token.push_back(static_cast<char>(ch));
    }
    return token;
}

long parse_pnm_int(std::istream& in, const char* what) {
    const std::string token = next_pnm_token(in);
    if (token.empty()) throw std::runtime_error(std::string("graymap: missing ") + what);
    std::size_t pos = 0;
    long value = 0;
    try {
        value = std::stol(token, &pos);
    } catch (const std::exception&) {
        throw std::runtime_error(std::string("graymap: malformed ") + what);
    }
    if (pos != token.size()) throw std::runtime_error(std::string("graymap: malformed ") + what);
    return value;
}

}  // namespace

PilotDataset load_grayscale_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_grayscale_image: cannot open " + path);
    const std::string magic = next_pnm_token(in);
    if (magic != "P2" && magic != "P5")
        throw std::runtime_error("load_grayscale_image: not a portable graymap (P2/P5)");
    const long width = parse_pnm_int(in, "width");
    const long height = parse_pnm_int(in, "height");
    const long maxval = parse_pnm_int(in, "maxval");
    if (width < 1 || height < 1)
        throw std::runtime_error("load_grayscale_image: bad dimensions");
    if (maxval < 1 || maxval > 65535)
        throw std::runtime_error("load_grayscale_image: maxval must lie in [1, 65535]");

    const long n = width * height;
    std::vector<double> pixels;
    pixels.reserve(static_cast<std::size_t>(n));
    if (magic == "P2") {
        for (long i = 0; i < n; ++i) {
            const long v = parse_pnm_int(in, "pixel");
            if (v < 0 || v > maxval)
                throw std::runtime_error("load_grayscale_image: pixel out of range");
            pixels.push_back(static_cast<double>(v));
        }
    } else {
        const int bytes_per = maxval > 255 ? 2 : 1;
        std::vector<unsigned char> buf(static_cast<std::size_t>(n) * bytes_per);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (in.gcount() != static_cast<std::streamsize>(buf.size()))
            throw std::runtime_error("load_grayscale_image: truncated pixel data");
        for (long i = 0; i < n; ++i) {
            long v;
            if (bytes_per == 1) {
                v = buf[static_cast<std::size_t>(i)];
            } else {  // big-endian, most significant byte first
                v = (static_cast<long>(buf[static_cast<std::size_t>(2 * i)]) << 8) |
                    buf[static_cast<std::size_t>(2 * i + 1)];
            }
            if (v > maxval) throw std::runtime_error("load_grayscale_image: pixel out of range");
            pixels.push_back(static_cast<double>(v));
        }
    }

    const double center = median(pixels);
    double scale = mad_scale(pixels);
    if (scale <= 0.0) {  // heavily discrete images can have zero MAD; fall back to the sd
        double mean = 0.0;
        for (const double v : pixels) mean += v;
        mean /= static_cast<double>(pixels.size());
        double ss = 0.0;
        for (const double v : pixels) ss += (v - mean) * (v - mean);
        scale = pixels.size() > 1 ? std::sqrt(ss / (static_cast<double>(pixels.size()) - 1.0)) : 0.0;
    }
    if (scale <= 0.0)
        throw DegenerateDataError("load_grayscale_image: constant image, cannot standardize");

    PilotDataset data;
    data.source = PilotDataset::Source::kGrayscaleImage;
    data.values.reserve(pixels.size());
    for (const double v : pixels) data.values.push_back({(v - center) / scale});
    return data;
}

}  // namespace smartseq
