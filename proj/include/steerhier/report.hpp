#pragma once

#include <algorithm>
#include <string>
#include <vector>

namespace steerhier {

// Residual report shared by the assemblage and moment-matrix validators.
// Each entry is the worst absolute residual observed for one constraint
// family; the report passes at tolerance `tol` iff every residual is <= tol.
struct ValidationReport {
    struct Entry {
        std::string family;
        double residual = 0.0;
    };
    std::vector<Entry> entries;

    void add(const std::string& family, double residual) { entries.push_back({family, residual}); }

    double max_residual() const {
        double worst = 0.0;
        for (const auto& e : entries) worst = std::max(worst, e.residual);
        return worst;
    }

    double residual_for(const std::string& family) const {
        for (const auto& e : entries)
            if (e.family == family) return e.residual;
        return 0.0;
    }

    bool pass(double tol) const { return max_residual() <= tol; }

    std::string describe() const {
        std::string s;
        for (const auto& e : entries) {
            s += e.family + ": " + std::to_string(e.residual) + "\n";
        }
        return s;
    }
};

}  // namespace steerhier
