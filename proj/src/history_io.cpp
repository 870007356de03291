#include "nnsolve/history_io.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

#include "nnsolve/errors.hpp"

namespace nnsolve {

namespace {

constexpr const char* kHeader = "iter,loss,lr,e_inf,e_l2,res_l2";

std::string fmt(double v) {
    std::array<char, 32> buf{};
    const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), r.ptr);
}

std::string cell(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

[[noreturn]] void bad(const std::string& path, std::size_t line, const std::string& what) {
    throw IoError(path + " line " + std::to_string(line) + ": " + what);
}

double parse_f64(std::string_view s, const std::string& path, std::size_t line) {
    double v{};
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size())
        bad(path, line, "cannot parse number '" + std::string(s) + "'");
    return v;
}

} // namespace

std::string history_csv(const std::vector<HistoryRecord>& records) {
    std::string out = kHeader;
    out += '\n';
    for (const auto& r : records) {
        out += std::to_string(r.iter) + ',' + fmt(r.loss) + ',' + fmt(r.lr) + ',' +
               cell(r.e_inf) + ',' + cell(r.e_l2) + ',' + cell(r.res_l2) + '\n';
    }
    return out;
}

void write_history_csv(const std::string& path, const std::vector<HistoryRecord>& records) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << history_csv(records);
    if (!out) throw IoError("failed writing '" + path + "'");
}

std::vector<HistoryRecord> read_history_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open history file '" + path + "'");
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw IoError(path + ": empty file, expected a header");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kHeader)
        bad(path, line_no, "expected header '" + std::string(kHeader) + "', got '" + line + "'");

    std::vector<HistoryRecord> records;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::array<std::string_view, 6> cells;
        std::string_view rest = line;
        for (std::size_t i = 0; i < 6; ++i) {
            const std::size_t comma = rest.find(',');
            if (i < 5 && comma == std::string_view::npos)
                bad(path, line_no, "expected 6 columns");
            if (i == 5 && comma != std::string_view::npos)
                bad(path, line_no, "expected 6 columns, found more");
            cells[i] = rest.substr(0, comma);
            rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
        }
        HistoryRecord r;
        const double iter = parse_f64(cells[0], path, line_no);
        r.iter = static_cast<std::int64_t>(iter);
        if (static_cast<double>(r.iter) != iter || r.iter < 0)
            bad(path, line_no, "iter must be a nonnegative integer");
        r.loss = parse_f64(cells[1], path, line_no);
        r.lr = parse_f64(cells[2], path, line_no);
        for (std::size_t i = 3; i < 6; ++i) {
            if (cells[i].empty()) continue;
            const double v = parse_f64(cells[i], path, line_no);
            if (i == 3) r.e_inf = v;
            else if (i == 4) r.e_l2 = v;
            else r.res_l2 = v;
        }
        records.push_back(std::move(r));
    }
    return records;
}

} // namespace nnsolve
