#pragma once

#include "freeconv/rmt_lab.hpp"
#include "freeconv/solver.hpp"

#include <functional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace freeconv {

/// Key/value pairs emitted as leading `# key,value` comment lines.
using CsvMetadata = std::vector<std::pair<std::string, std::string>>;

void write_metadata(std::ostream& os, const CsvMetadata& meta);

/// `lambda,rho` rows; atoms appear as `# atom,<position>,<mass>` comments
/// and the smoothing height as `# epsilon_used,<eps>`.
void write_density_csv(std::ostream& os, const DensityEstimate& est);

/// `lambda,y,f_re,f_im,d1_re,d1_im,d2_re,d2_im,residual,iters` rows.
void write_states_csv(std::ostream& os, const std::vector<SubordinationState>& states);

void write_histogram_csv(std::ostream& os, const rmt::Histogram& hist, const CsvMetadata& meta);

void write_variance_csv(std::ostream& os, const rmt::VarianceReport& report,
                        const CsvMetadata& meta);

/// Runs writer on a file stream for path, or on fallback when path is
/// empty or "-".
void write_csv_file(const std::string& path, std::ostream& fallback,
                    const std::function<void(std::ostream&)>& writer);

/// Shortest decimal form that round-trips the value.
std::string format_double(double v);

} // namespace freeconv
