#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "csma/allocation.hpp"
#include "csma/constellation.hpp"

namespace csma {

struct MinDistanceReport {
    double full_constellation_dmin = 0.0;
    /// Indexed like plan.users(); +inf for a user holding a single point.
    std::vector<double> per_user_dmin;
};

namespace detail {

inline double min_pairwise(const std::vector<cplx>& pts)
{
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j)
            best = std::min(best, std::abs(pts[i] - pts[j]));
    return best;
}

} // namespace detail

inline MinDistanceReport min_distance(const Constellation& c, const std::optional<AllocationPlan>& plan = std::nullopt)
{
    MinDistanceReport report;
    report.full_constellation_dmin = detail::min_pairwise(c.points());
    if (!plan)
        return report;
    if (plan->order() != c.order())
        throw Error(ErrorCode::mismatch, "plan order " + std::to_string(plan->order()) +
                                             " does not match constellation order " + std::to_string(c.order()));
    for (const auto& u : plan->users()) {
        std::vector<cplx> pts;
        pts.reserve(u.codewords.size());
        for (Label cw : u.codewords)
            pts.push_back(c.point_for_label(cw));
        report.per_user_dmin.push_back(detail::min_pairwise(pts));
    }
    return report;
}

} // namespace csma
