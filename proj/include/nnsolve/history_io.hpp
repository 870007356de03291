#pragma once

#include <string>
#include <vector>

#include "nnsolve/solver.hpp"

namespace nnsolve {

/// history.csv layout: header `iter,loss,lr,e_inf,e_l2,res_l2`, one row per
/// logged iteration, optional metric cells left empty when not evaluated.
std::string history_csv(const std::vector<HistoryRecord>& records);

void write_history_csv(const std::string& path, const std::vector<HistoryRecord>& records);

/// Strict reader for the layout above; IoError names the offending line.
std::vector<HistoryRecord> read_history_csv(const std::string& path);

} // namespace nnsolve
