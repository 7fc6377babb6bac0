#pragma once

#include <string>

#include <json.hpp>

#include "qzeta/eps_series.hpp"

namespace qzeta {

/// JSON encoding of an EpsSeries. One record per (eps power, T power) pair;
/// coefficients are decimal strings so round-trips preserve the value exactly
/// at the stated precision.
inline nlohmann::json to_json(const EpsSeries& x) {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& [e, tp] : x.terms()) {
        for (int k = 0; k <= tp.degree(); ++k) {
            DeltaSeries d = tp.coeff(k);
            if (d.is_structurally_zero()) continue;
            int dlo = d.coeffs().begin()->first;
            int dhi = d.coeffs().rbegin()->first;
            nlohmann::json coeffs = nlohmann::json::array();
            for (int m = dlo; m <= dhi; ++m) coeffs.push_back(d.coeff(m).str());
            terms.push_back({{"eps", e},
                             {"t_pow", k},
                             {"delta_lo", dlo},
                             {"delta_hi", dhi},
                             {"delta_coeffs", coeffs}});
        }
    }
    return {{"eps_lo", x.lo()},
            {"eps_hi", std::min(x.hi(), kExactHi)},
            {"terms", terms}};
}

inline EpsSeries eps_series_from_json(const nlohmann::json& j,
                                      mpfr_prec_t prec = Real::default_precision()) {
    EpsSeries x(prec, j.at("eps_hi").get<int>());
    x.declare_lo(j.at("eps_lo").get<int>());
    for (const auto& t : j.at("terms")) {
        int e = t.at("eps").get<int>();
        int k = t.at("t_pow").get<int>();
        int dlo = t.at("delta_lo").get<int>();
        DeltaSeries d(prec, kExactHi);
        int m = dlo;
        for (const auto& c : t.at("delta_coeffs"))
            d.set(m++, Real(c.get<std::string>(), prec));
        x.add_to(e, TPoly::t_power(d, k));
    }
    return x;
}

} // namespace qzeta
