#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>
#include <tuple>

#include "hfx/compare.hpp"
#include "hfx/errors.hpp"

namespace hfx {

const char* quantity_name(Quantity q) { return q == Quantity::A_z ? "A_z" : "A_zz"; }

const char* dataset_tag_name(DatasetTag t) {
    switch (t) {
        case DatasetTag::I: return "I";
        case DatasetTag::II: return "II";
        case DatasetTag::III: return "III";
        default: return "user";
    }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    std::istringstream ls(line);
    while (std::getline(ls, cur, ',')) {
        const size_t a = cur.find_first_not_of(" \t\r");
        const size_t b = cur.find_last_not_of(" \t\r");
        fields.push_back(a == std::string::npos ? std::string() : cur.substr(a, b - a + 1));
    }
    // A trailing comma means one more empty field.
    if (!line.empty() && line.back() == ',') fields.push_back(std::string());
    return fields;
}

double parse_num(const std::string& s, int lineno, const char* what) {
    try {
        size_t pos = 0;
        const double x = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return x;
    } catch (const std::exception&) {
        throw_parse("BadDataset", "line " + std::to_string(lineno) + ": bad " +
                                      std::string(what) + " '" + s + "'");
    }
}

} // namespace

std::vector<ExperimentalRecord> load_dataset(std::istream& in, DatasetTag tag) {
    std::vector<ExperimentalRecord> out;
    std::string line;
    int lineno = 0;
    bool header_allowed = true;
    std::optional<Quantity> stream_quantity;

    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r,") == std::string::npos) continue;

        const auto fields = split_csv(line);

        // Header row: detect by the value column not being a number.
        if (header_allowed) {
            header_allowed = false;
            if (fields.size() >= 3) {
                try {
                    size_t pos = 0;
                    (void)std::stod(fields[2], &pos);
                    if (pos != fields[2].size()) throw std::invalid_argument(fields[2]);
                } catch (const std::exception&) {
                    continue;
                }
            }
        }

        if (fields.size() != 4 && fields.size() != 7)
            throw_parse("BadDataset",
                        "line " + std::to_string(lineno) +
                            ": expected 4 columns (id, quantity, value_MHz, unc_MHz) or 7 "
                            "(plus x, y, z), got " +
                            std::to_string(fields.size()));

        ExperimentalRecord r;
        r.id = fields[0];
        r.tag = tag;
        if (r.id.empty())
            throw_parse("BadDataset", "line " + std::to_string(lineno) + ": empty record id");

        if (fields[1] == "A_z") {
            r.quantity = Quantity::A_z;
        } else if (fields[1] == "A_zz") {
            r.quantity = Quantity::A_zz;
        } else {
            throw_parse("BadDataset", "line " + std::to_string(lineno) + ": quantity must be "
                                          "A_z or A_zz, got '" + fields[1] + "'");
        }
        if (stream_quantity && *stream_quantity != r.quantity)
            throw_parse("BadDataset",
                        "line " + std::to_string(lineno) + ": mixed quantities in one dataset");
        stream_quantity = r.quantity;

        // Named datasets carry a fixed quantity: I reports A_z, II and III A_zz.
        if ((tag == DatasetTag::I && r.quantity != Quantity::A_z) ||
            ((tag == DatasetTag::II || tag == DatasetTag::III) && r.quantity != Quantity::A_zz))
            throw_parse("BadDataset", "line " + std::to_string(lineno) + ": dataset " +
                                          dataset_tag_name(tag) + " must use " +
                                          (tag == DatasetTag::I ? "A_z" : "A_zz"));

        r.value_mhz = parse_num(fields[2], lineno, "value_MHz");
        r.unc_mhz = parse_num(fields[3], lineno, "unc_MHz");
        if (r.unc_mhz < 0)
            throw_parse("BadDataset",
                        "line " + std::to_string(lineno) + ": negative uncertainty");

        if (fields.size() == 7) {
            const bool any = !fields[4].empty() || !fields[5].empty() || !fields[6].empty();
            const bool all = !fields[4].empty() && !fields[5].empty() && !fields[6].empty();
            if (any && !all)
                throw_parse("BadDataset", "line " + std::to_string(lineno) +
                                              ": position needs all of x, y, z");
            if (all)
                r.position = Vec3(parse_num(fields[4], lineno, "x"),
                                  parse_num(fields[5], lineno, "y"),
                                  parse_num(fields[6], lineno, "z"));
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<MatchResult> position_spins(const std::vector<ExperimentalRecord>& records,
                                        const std::vector<TheoryEntry>& theory,
                                        const MatchParams& params) {
    std::vector<MatchResult> results;
    results.reserve(records.size());

    for (const ExperimentalRecord& r : records) {
        MatchResult m;
        m.record_id = r.id;
        m.experiment_mhz = r.value_mhz;

        if (r.position) {
            // Positioned records bind geometrically, not by value.
            const TheoryEntry* best = nullptr;
            double best_d2 = 0.0;
            for (const TheoryEntry& t : theory) {
                const double d2 = (t.pos - *r.position).squaredNorm();
                if (!best || d2 < best_d2 ||
                    (d2 == best_d2 && t.site_index < best->site_index)) {
                    best = &t;
                    best_d2 = d2;
                }
            }
            if (best && best_d2 <= params.position_radius * params.position_radius) {
                m.candidates.push_back({best->site_index, best->pos, best->value_mhz,
                                        std::fabs(std::fabs(best->value_mhz) -
                                                  std::fabs(r.value_mhz)),
                                        best->distance});
                m.matched = true;
            } else {
                m.position_mismatch = true;
                std::cerr << "warning: PositionMismatch: record " << r.id
                          << " has no lattice site within " << params.position_radius
                          << " A of its stated position\n";
            }
            results.push_back(std::move(m));
            continue;
        }

        const double margin =
            params.margin_k * (r.unc_mhz + params.theory_tol_rel * std::fabs(r.value_mhz));
        const double target = std::fabs(r.value_mhz);
        for (const TheoryEntry& t : theory) {
            const double residual = std::fabs(std::fabs(t.value_mhz) - target);
            if (residual <= margin)
                m.candidates.push_back({t.site_index, t.pos, t.value_mhz, residual, t.distance});
        }
        std::sort(m.candidates.begin(), m.candidates.end(),
                  [](const MatchCandidate& a, const MatchCandidate& b) {
                      return std::tie(a.residual_mhz, a.distance, a.site_index) <
                             std::tie(b.residual_mhz, b.distance, b.site_index);
                  });
        m.matched = !m.candidates.empty();
        if (m.candidates.size() >= 2 &&
            m.candidates[1].residual_mhz - m.candidates[0].residual_mhz < 1e-12)
            m.tie = true;
        results.push_back(std::move(m));
    }

    std::stable_sort(results.begin(), results.end(),
                     [](const MatchResult& a, const MatchResult& b) {
                         return a.record_id < b.record_id;
                     });
    return results;
}

ErrorMetrics error_metrics(const std::vector<std::pair<double, double>>& theory_experiment) {
    ErrorMetrics m;
    double sum_are = 0.0;
    double sum_sre = 0.0;
    for (const auto& [t, e] : theory_experiment) {
        if (e == 0.0) {
            ++m.n_excluded_zero;
            continue;
        }
        const double are = std::fabs(t - e) / std::fabs(e);
        m.are.push_back(are);
        sum_are += are;
        sum_sre += (t - e) / e;
        ++m.n_used;
    }
    if (m.n_excluded_zero > 0)
        std::cerr << "warning: " << m.n_excluded_zero
                  << " record(s) with zero experimental value excluded from error metrics\n";
    if (m.n_used > 0) {
        m.mape_pct = 100.0 * sum_are / double(m.n_used);
        m.msre_pct = 100.0 * sum_sre / double(m.n_used);
    }
    m.mare_pct = m.mape_pct;
    return m;
}

int count_sign_flips(const std::vector<std::pair<double, double>>& theory_experiment) {
    int flips = 0;
    for (const auto& [t, e] : theory_experiment)
        if (t * e < 0.0) ++flips;
    return flips;
}

} // namespace hfx
