#pragma once
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hfx/geometry.hpp"

namespace hfx {

enum class Quantity { A_z, A_zz };
enum class DatasetTag { I, II, III, user };

const char* quantity_name(Quantity q);
const char* dataset_tag_name(DatasetTag t);

// One experimental hyperfine value. Signed value stored as given; the
// magnitude convention (one documented global sign flip) is applied at
// comparison time, never here.
struct ExperimentalRecord {
    std::string id;
    Quantity quantity = Quantity::A_zz;
    double value_mhz = 0.0;
    double unc_mhz = 0.0;
    std::optional<Vec3> position; // Angstrom, relative to the defect center
    DatasetTag tag = DatasetTag::user;
};

// CSV columns: id, quantity, value_MHz, unc_MHz[, x, y, z]. One optional
// header row. All records in a stream must carry the same quantity.
std::vector<ExperimentalRecord> load_dataset(std::istream& in, DatasetTag tag);

// Theory side of the matching: one scalar (A_z or A_zz) per site.
struct TheoryEntry {
    int site_index = -1;
    double value_mhz = 0.0;
    double distance = 0.0; // from the defect center, Angstrom
    Vec3 pos = Vec3::Zero();
};

struct MatchParams {
    double margin_k = 3.0;         // margin = k * (uncertainty + tol_rel * |value|)
    double theory_tol_rel = 0.02;  // relative theory tolerance inside the margin
    double position_radius = 0.3;  // Angstrom, for records that carry positions
};

struct MatchCandidate {
    int site_index = -1;
    Vec3 pos = Vec3::Zero();
    double theory_mhz = 0.0;  // signed, as tabulated
    double residual_mhz = 0.0; // | |theory| - |experiment| |
    double distance = 0.0;
};

struct MatchResult {
    std::string record_id;
    double experiment_mhz = 0.0;
    std::vector<MatchCandidate> candidates; // sorted by (residual, distance, index)
    bool matched = false;
    bool tie = false;               // two leading candidates within 1e-12 MHz
    bool position_mismatch = false; // positioned record, no site within radius
};

// Positioning by closest hyperfine value on magnitudes. Records with a
// position skip value matching: they bind to the nearest site if one lies
// within position_radius, else they come back unmatched with a
// PositionMismatch warning. Value-matched candidates are every site whose
// residual fits the margin; an empty candidate list is an unmatched entry,
// not an error. Results ordered by record id (input order on equal ids).
std::vector<MatchResult> position_spins(const std::vector<ExperimentalRecord>& records,
                                        const std::vector<TheoryEntry>& theory,
                                        const MatchParams& params = {});

struct ErrorMetrics {
    double mape_pct = 0.0; // mean |t-e|/|e| * 100; MARE is the same number
    double mare_pct = 0.0;
    double msre_pct = 0.0; // mean (t-e)/e * 100
    std::vector<double> are;
    size_t n_used = 0;
    size_t n_excluded_zero = 0; // experiment == 0, dropped with a warning
};

// Plain formulas on the pairs as given; sign conventions are the caller's
// business. MAPE >= |MSRE| by the triangle inequality.
ErrorMetrics error_metrics(const std::vector<std::pair<double, double>>& theory_experiment);

// Sites where theory and experiment disagree in sign, i.e. t * e < 0.
int count_sign_flips(const std::vector<std::pair<double, double>>& theory_experiment);

} // namespace hfx
