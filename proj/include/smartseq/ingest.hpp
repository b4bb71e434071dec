#pragma once
// Pilot-data ingestion: z-scores from replicated measurements, empirical-null
// estimation, semi-synthetic model construction, and graymap image loading.

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "smartseq/model.hpp"

namespace smartseq {

struct DegenerateDataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PilotDataset {
    enum class Source { kDelimitedTable, kGrayscaleImage };
    Source source = Source::kDelimitedTable;
    std::vector<std::vector<double>> values;  // per-location measurements (ragged)

    int p() const { return static_cast<int>(values.size()); }
};

struct EmpiricalNullFit {
    double pi_hat = 0.0;
    double mu0_hat = 0.0;
    double sigma0_hat = 1.0;
    double mu_signal_hat = 0.0;
    bool pi_at_floor = false;
};

inline constexpr double kPiHatFloor = 1e-4;

// Location z-scores: replicate means standardized by the pooled replicate
// standard error. Requires a common replicate count; with a single replicate
// the raw values are standardized by their own median/MAD scale instead.
std::vector<double> compute_z_scores(const PilotDataset& data);

// Median/MAD null fit with a two-sided tail-exceedance estimate of the
// non-null proportion; the signal amplitude is the mean of the largest
// ceil(p * pi_hat) values.
EmpiricalNullFit fit_empirical_null(std::span<const double> z, double c = 2.0);

struct SemisyntheticModel {
    MixtureModel model;
    bool pi_at_floor = false;
};

// Mixture model with the fitted empirical null, the fitted non-null
// proportion and a point mass at the fitted signal amplitude. p is the
// location count of the stream the model will drive (usually the pilot's).
SemisyntheticModel build_semisynthetic_model(const EmpiricalNullFit& fit, int p);

// Header row "location_id,rep1,...,repm"; comma-separated, UTF-8.
PilotDataset load_delimited_table(const std::string& path);

// Portable graymap (P2 ASCII or P5 binary, maxval <= 65535); one location per
// pixel, standardized to zero median and unit MAD.
PilotDataset load_grayscale_image(const std::string& path);

// Mean of the ceil(fraction * n) largest values.
double top_fraction_mean(std::span<const double> values, double fraction);

double median(std::span<const double> values);

// 1.4826 * median absolute deviation.
double mad_scale(std::span<const double> values);

double normal_cdf(double x);

}  // namespace smartseq
