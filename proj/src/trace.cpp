#include "dg3pd/solver.hpp"

#include <cstdio>
#include <ostream>
#include <sstream>

namespace dg3pd {

namespace {

std::string full_precision(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string csv_row(const TraceRecord& r)
{
    std::string row = std::to_string(r.iter);
    for (double v : {r.rel_err_u, r.l2_recon, r.linf_recon, r.dtv_u, r.l1_v, r.sup_eps, r.mu1, r.mu2})
        row += ',' + full_precision(v);
    return row;
}

void ConvergenceTrace::write_csv(std::ostream& out) const
{
    out << kCsvHeader << '\n';
    for (const auto& r : records)
        out << csv_row(r) << '\n';
}

std::string ConvergenceTrace::to_csv() const
{
    std::ostringstream os;
    write_csv(os);
    return os.str();
}

}  // namespace dg3pd
