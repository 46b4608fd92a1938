#include "freeconv/csv.hpp"

#include <charconv>
#include <fstream>
#include <stdexcept>

namespace freeconv {

std::string format_double(double v)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_metadata(std::ostream& os, const CsvMetadata& meta)
{
    for (const auto& [key, value] : meta)
        os << "# " << key << "," << value << "\n";
}

void write_density_csv(std::ostream& os, const DensityEstimate& est)
{
    os << "# epsilon_used," << format_double(est.epsilon_used) << "\n";
    for (const Atom& a : est.atoms)
        os << "# atom," << format_double(a.position) << "," << format_double(a.mass) << "\n";
    os << "lambda,rho\n";
    for (std::size_t i = 0; i < est.lambdas.size(); ++i)
        os << format_double(est.lambdas[i]) << "," << format_double(est.rho[i]) << "\n";
}

void write_states_csv(std::ostream& os, const std::vector<SubordinationState>& states)
{
    os << "lambda,y,f_re,f_im,d1_re,d1_im,d2_re,d2_im,residual,iters\n";
    for (const SubordinationState& s : states)
        os << format_double(s.z.real()) << "," << format_double(s.z.imag()) << ","
           << format_double(s.f.real()) << "," << format_double(s.f.imag()) << ","
           << format_double(s.delta1.real()) << "," << format_double(s.delta1.imag()) << ","
           << format_double(s.delta2.real()) << "," << format_double(s.delta2.imag()) << ","
           << format_double(s.residual) << "," << s.iterations << "\n";
}

void write_histogram_csv(std::ostream& os, const rmt::Histogram& hist, const CsvMetadata& meta)
{
    write_metadata(os, meta);
    os << "bin_lo,bin_hi,mass\n";
    for (std::size_t i = 0; i < hist.masses.size(); ++i)
        os << format_double(hist.edges[i]) << "," << format_double(hist.edges[i + 1]) << ","
           << format_double(hist.masses[i]) << "\n";
}

void write_variance_csv(std::ostream& os, const rmt::VarianceReport& report,
                        const CsvMetadata& meta)
{
    write_metadata(os, meta);
    os << "# slope_g," << format_double(report.slope_g) << "\n";
    os << "# slope_delta," << format_double(report.slope_delta) << "\n";
    os << "n,var_g,var_delta\n";
    for (std::size_t i = 0; i < report.ns.size(); ++i)
        os << report.ns[i] << "," << format_double(report.var_g[i]) << ","
           << format_double(report.var_delta[i]) << "\n";
}

void write_csv_file(const std::string& path, std::ostream& fallback,
                    const std::function<void(std::ostream&)>& writer)
{
    if (path.empty() || path == "-") {
        writer(fallback);
        return;
    }
    std::ofstream out(path);
    if (!out)
        throw std::invalid_argument("cannot open output file: " + path);
    writer(out);
    if (!out)
        throw std::runtime_error("write failed: " + path);
}

} // namespace freeconv
