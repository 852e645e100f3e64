#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "normgam/estimation.hpp"
#include "normgam/negctrl.hpp"
#include "normgam/simulation.hpp"

namespace normgam {

// Input error carrying the 1-based line number of the offending row.
class ParseError : public std::runtime_error {
  public:
    ParseError(const std::filesystem::path& file, std::size_t line, const std::string& what);
    std::size_t line() const { return line_; }

  private:
    std::size_t line_;
};

// Combined array file: '#' comment header, then `probe_id \t intensity`
// rows; a `>negative` sentinel line separates the negative-control section.
// An optional third column holds detection p-values.
struct ArrayFile {
    std::vector<std::string> regular_ids;
    std::vector<std::string> negative_ids;
    ProbeArray probes;
};

ArrayFile read_array_file(const std::filesystem::path& path);
void write_array_file(const std::filesystem::path& path, const ArrayFile& file,
                      const std::vector<std::string>& header_comments = {});

// `probe_id \t intensity \t detection_pvalue` rows.
DetectionTable read_detection_table(const std::filesystem::path& path, std::size_t n_neg);

// Fitted parameters as key=value text. `model` is one of normgam,
// normexp-mle, normexp-np, normexp-rma.
struct FitRecord {
    std::string model;
    double mu = 0.0;
    double sigma = 0.0;
    double shape = 0.0;   // normgam only
    double scale = 0.0;   // theta, or alpha for normexp models
    double loglik = 0.0;
    int iterations = 0;
    bool converged = true;
};

void write_fit_record(const std::filesystem::path& path, const FitRecord& rec);
FitRecord read_fit_record(const std::filesystem::path& path);

// Simple `key=value` manifest with '#' comments.
using Manifest = std::map<std::string, std::string>;
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);
Manifest read_manifest(const std::filesystem::path& path);

// One value (or id \t value) per line.
void write_column(const std::filesystem::path& path, std::span<const double> values,
                  const std::vector<std::string>& ids = {},
                  const std::vector<std::string>& header_comments = {});
std::vector<double> read_column(const std::filesystem::path& path);

// Two-column `x \t value` table (density grids, profiles).
void write_xy(const std::filesystem::path& path, std::span<const double> x,
              std::span<const double> y, const std::string& comment = {});

// Batch directory layout: array_<l>.tsv / negative_<l>.tsv per replicate,
// signal.tsv (shared) or signal_<l>.tsv, manifest.txt written last.
void write_batch(const std::filesystem::path& dir, const SimulatedBatch& batch);

struct BatchOnDisk {
    std::vector<ProbeArray> arrays;
    std::vector<std::vector<double>> signals;  // size 1 when shared
    bool shared_signal = false;
    Manifest manifest;

    const std::vector<double>& signal_for(std::size_t i) const {
        return shared_signal ? signals.front() : signals.at(i);
    }
};

BatchOnDisk read_batch(const std::filesystem::path& dir);

// 17 significant digits, enough to round-trip doubles exactly.
std::string format_double(double v);

}  // namespace normgam
