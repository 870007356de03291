#include "nnsolve/config.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <system_error>

#include "nnsolve/errors.hpp"

namespace nnsolve {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

struct Entry {
    std::string value;
    int line = 0;
};

using SectionMap = std::map<std::string, Entry>;

constexpr std::array<std::string_view, 5> kSections{"problem", "architecture", "training",
                                                    "evaluation", "output"};

[[noreturn]] void fail(int line, const std::string& what) {
    throw ParamError("config line " + std::to_string(line) + ": " + what);
}

std::map<std::string, SectionMap> parse_raw(std::string_view text) {
    std::map<std::string, SectionMap> out;
    std::string section;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? eol : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3)
                fail(line_no, "malformed section header '" + std::string(line) + "'");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            bool known = false;
            for (auto k : kSections) known = known || section == k;
            if (!known) fail(line_no, "unknown section [" + section + "]");
            out.try_emplace(section);
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos)
            fail(line_no, "expected 'key = value', got '" + std::string(line) + "'");
        if (section.empty()) fail(line_no, "key before any [section] header");
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (key.empty()) fail(line_no, "empty key");
        if (value.empty()) fail(line_no, "empty value for key '" + key + "'");
        auto [it, fresh] = out[section].try_emplace(key, Entry{value, line_no});
        if (!fresh)
            fail(line_no, "duplicate key '" + key + "' in [" + section + "] (first on line " +
                              std::to_string(it->second.line) + ")");
    }
    return out;
}

/// Hands out keys one by one and rejects whatever is left unclaimed.
class Section {
public:
    Section(std::string name, SectionMap entries)
        : name_(std::move(name)), entries_(std::move(entries)) {}

    const Entry* take(const std::string& key) {
        const auto it = entries_.find(key);
        if (it == entries_.end()) return nullptr;
        taken_.push_back(it);
        return &it->second;
    }

    void finish() {
        for (auto it : taken_) entries_.erase(it);
        if (entries_.empty()) return;
        const auto& [key, e] = *entries_.begin();
        fail(e.line, "unknown key '" + key + "' in [" + name_ + "]");
    }

private:
    std::string name_;
    SectionMap entries_;
    std::vector<SectionMap::iterator> taken_;
};

template <typename T>
T parse_number(const Entry& e, const std::string& key) {
    T v{};
    const char* first = e.value.data();
    const char* last = first + e.value.size();
    const auto r = std::from_chars(first, last, v);
    if (r.ec != std::errc{} || r.ptr != last)
        fail(e.line, "key '" + key + "': cannot parse '" + e.value + "'");
    return v;
}

std::vector<std::string> split_list(const Entry& e, const std::string& key) {
    std::vector<std::string> items;
    std::string_view rest = e.value;
    while (true) {
        const std::size_t comma = rest.find(',');
        const std::string_view item = trim(rest.substr(0, comma));
        if (item.empty()) fail(e.line, "key '" + key + "': empty list entry");
        items.emplace_back(item);
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
    }
    return items;
}

template <typename T>
std::vector<T> parse_list(const Entry& e, const std::string& key) {
    std::vector<T> out;
    for (const auto& item : split_list(e, key)) {
        Entry one{item, e.line};
        out.push_back(parse_number<T>(one, key));
    }
    return out;
}

ProblemConfig read_problem(Section& sec) {
    ProblemConfig pc;
    const Entry* fam = sec.take("family");
    if (!fam) throw ParamError("config: [problem] needs a 'family' key");
    pc.family = fam->value;
    const bool poisson = pc.family == "poisson";
    const bool riesz = pc.family == "riesz";
    const bool queueing = pc.family == "queueing";
    const bool pbn = pc.family == "pbn";
    if (!poisson && !riesz && !queueing && !pbn)
        fail(fam->line, "unknown family '" + pc.family +
                            "' (expected poisson, riesz, queueing, or pbn)");

    const Entry* de = sec.take("d");
    if (!de) throw ParamError("config: [problem] needs a 'd' key");
    pc.d = parse_number<int>(*de, "d");
    if (pc.d < 1) fail(de->line, "d must be >= 1");

    if (const Entry* ne = sec.take("N"); ne) {
        if (pbn) fail(ne->line, "pbn fixes the grid at 2 points per dimension; drop 'N'");
        pc.N = parse_number<std::int64_t>(*ne, "N");
        if (pc.N < 1) fail(ne->line, "N must be >= 1");
    } else if (poisson || riesz) {
        throw ParamError("config: family '" + pc.family + "' needs an 'N' key");
    } else if (queueing) {
        pc.N = 100;
    }

    if (riesz) {
        if (const Entry* e = sec.take("c"); e) {
            pc.c = parse_list<double>(*e, "c");
            if (static_cast<int>(pc.c.size()) != pc.d)
                fail(e->line, "c needs one entry per dimension");
            for (double v : pc.c)
                if (!(v > 0.0)) fail(e->line, "c entries must be positive");
        }
        if (const Entry* e = sec.take("alpha"); e) {
            pc.alpha = parse_list<double>(*e, "alpha");
            if (static_cast<int>(pc.alpha.size()) != pc.d)
                fail(e->line, "alpha needs one entry per dimension");
            for (double v : pc.alpha)
                if (!(v > 1.0) || !(v < 2.0))
                    fail(e->line, "alpha entries must lie strictly in (1,2)");
        }
    }
    if (queueing) {
        if (const Entry* e = sec.take("alpha"); e)
            pc.overflow_alpha = parse_number<double>(*e, "alpha");
        if (const Entry* e = sec.take("lambda"); e) {
            pc.lambda = parse_list<double>(*e, "lambda");
            if (static_cast<int>(pc.lambda.size()) != pc.d)
                fail(e->line, "lambda needs one entry per dimension");
            for (double v : pc.lambda)
                if (!(v > 0.0)) fail(e->line, "lambda entries must be positive");
        }
        if (const Entry* e = sec.take("s"); e) {
            pc.s = parse_list<std::int64_t>(*e, "s");
            if (static_cast<int>(pc.s.size()) != pc.d)
                fail(e->line, "s needs one entry per dimension");
            for (std::int64_t v : pc.s)
                if (v < 1) fail(e->line, "s entries must be >= 1");
        }
        if (pc.N < 2) throw ParamError("config: queueing needs N >= 2");
        if (pc.d > pc.N)
            throw ParamError("config: queueing needs d <= N for the coupling term");
    }
    if (pbn) {
        const Entry* se = sec.take("shifts");
        const Entry* ve = sec.take("values");
        if (static_cast<bool>(se) != static_cast<bool>(ve))
            fail((se ? se : ve)->line, "shifts and values must be given together");
        if (se) {
            pc.shifts = parse_list<std::int64_t>(*se, "shifts");
            pc.values = parse_list<double>(*ve, "values");
            if (pc.shifts.empty() || pc.shifts.size() != pc.values.size())
                fail(se->line, "shifts and values need equal nonzero lengths");
            for (double v : pc.values)
                if (!(v > 0.0)) fail(ve->line, "values entries must be positive");
        } else if (pc.d < 5) {
            fail(de->line, "pbn with default shifts needs d >= 5");
        }
    }
    if (queueing || pbn) {
        if (const Entry* e = sec.take("epsilon"); e) {
            pc.epsilon = parse_number<double>(*e, "epsilon");
            if (!(pc.epsilon > 0.0)) fail(e->line, "epsilon must be positive");
        }
    }
    sec.finish();
    return pc;
}

TrainConfig read_training(Section& sec, const std::string& family) {
    TrainConfig tc;
    if (family == "poisson") {
        tc.batch_size = 10000;
        tc.max_iters = 50000;
    } else {
        tc.batch_size = 20000;
        tc.max_iters = 20000;
    }
    if (const Entry* e = sec.take("batch_size"); e)
        tc.batch_size = parse_number<std::int64_t>(*e, "batch_size");
    if (const Entry* e = sec.take("max_iters"); e)
        tc.max_iters = parse_number<std::int64_t>(*e, "max_iters");
    if (const Entry* e = sec.take("lr_start"); e)
        tc.lr_start = parse_number<double>(*e, "lr_start");
    if (const Entry* e = sec.take("lr_end"); e)
        tc.lr_end = parse_number<double>(*e, "lr_end");
    if (const Entry* e = sec.take("seed"); e)
        tc.seed = parse_number<std::uint64_t>(*e, "seed");
    if (const Entry* e = sec.take("eval_every"); e)
        tc.eval_every = parse_number<std::int64_t>(*e, "eval_every");
    if (const Entry* e = sec.take("optimizer"); e) {
        if (e->value == "plain-sgd") tc.optimizer = Optimizer::Sgd;
        else if (e->value == "adaptive-moment") tc.optimizer = Optimizer::Adam;
        else fail(e->line, "optimizer must be plain-sgd or adaptive-moment");
    }
    if (const Entry* e = sec.take("init"); e) {
        if (e->value == "inv-sqrt") tc.init = InitMode::InverseSqrt;
        else if (e->value == "sqrt-literal") tc.init = InitMode::SqrtLiteral;
        else fail(e->line, "init must be inv-sqrt or sqrt-literal");
    }
    sec.finish();
    try {
        tc.validate();
    } catch (const ParamError& err) {
        throw ParamError("config: [training] invalid: " + std::string(err.what()));
    }
    return tc;
}

std::string fmt(double v) {
    std::array<char, 32> buf{};
    const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), r.ptr);
}

template <typename T>
std::string join(const std::vector<T>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        if constexpr (std::is_same_v<T, double>) out += fmt(v[i]);
        else if constexpr (std::is_same_v<T, std::string>) out += v[i];
        else out += std::to_string(v[i]);
    }
    return out;
}

} // namespace

RunConfig parse_config(std::string_view text) {
    auto raw = parse_raw(text);
    const auto grab = [&](const char* name) {
        SectionMap m;
        if (const auto it = raw.find(name); it != raw.end()) m = std::move(it->second);
        return Section(name, std::move(m));
    };
    if (!raw.count("problem")) throw ParamError("config: missing [problem] section");
    if (!raw.count("architecture")) throw ParamError("config: missing [architecture] section");

    RunConfig c;
    Section problem = grab("problem");
    c.problem = read_problem(problem);

    Section arch = grab("architecture");
    const Entry* le = arch.take("L");
    const Entry* me = arch.take("M");
    if (!le || !me) throw ParamError("config: [architecture] needs 'L' and 'M' keys");
    c.L = parse_number<int>(*le, "L");
    c.M = parse_number<int>(*me, "M");
    if (c.L < 2) fail(le->line, "L must be >= 2 (input affine layer plus output)");
    if (c.M < 1) fail(me->line, "M must be >= 1");
    arch.finish();

    Section training = grab("training");
    c.training = read_training(training, c.problem.family);

    Section evaluation = grab("evaluation");
    if (const Entry* e = evaluation.take("n_test"); e) {
        c.evaluation.n_test = parse_number<std::int64_t>(*e, "n_test");
        if (c.evaluation.n_test < 1) fail(e->line, "n_test must be >= 1");
    }
    if (const Entry* e = evaluation.take("test_seed"); e)
        c.evaluation.test_seed = parse_number<std::uint64_t>(*e, "test_seed");
    evaluation.finish();

    Section output = grab("output");
    if (const Entry* e = output.take("directory"); e) c.output.directory = e->value;
    if (const Entry* e = output.take("formats"); e) {
        c.output.formats.clear();
        std::set<std::string> seen;
        for (auto& f : split_list(*e, "formats")) {
            if (f != "csv" && f != "json" && f != "checkpoint")
                fail(e->line, "formats entries must be csv, json, or checkpoint");
            if (!seen.insert(f).second) fail(e->line, "duplicate format '" + f + "'");
            c.output.formats.push_back(std::move(f));
        }
    }
    output.finish();
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("cannot read config file '" + path + "'");
    return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& c) {
    const auto& p = c.problem;
    std::string out;
    out += "[problem]\n";
    out += "family = " + p.family + "\n";
    out += "d = " + std::to_string(p.d) + "\n";
    if (p.family != "pbn") out += "N = " + std::to_string(p.N) + "\n";
    if (p.family == "riesz") {
        if (!p.c.empty()) out += "c = " + join(p.c) + "\n";
        if (!p.alpha.empty()) out += "alpha = " + join(p.alpha) + "\n";
    }
    if (p.family == "queueing") {
        out += "alpha = " + fmt(p.overflow_alpha) + "\n";
        if (!p.lambda.empty()) out += "lambda = " + join(p.lambda) + "\n";
        if (!p.s.empty()) out += "s = " + join(p.s) + "\n";
    }
    if (p.family == "pbn" && !p.shifts.empty()) {
        out += "shifts = " + join(p.shifts) + "\n";
        out += "values = " + join(p.values) + "\n";
    }
    if (p.family == "queueing" || p.family == "pbn")
        out += "epsilon = " + fmt(p.epsilon) + "\n";

    out += "\n[architecture]\n";
    out += "L = " + std::to_string(c.L) + "\n";
    out += "M = " + std::to_string(c.M) + "\n";

    const auto& t = c.training;
    out += "\n[training]\n";
    out += "batch_size = " + std::to_string(t.batch_size) + "\n";
    out += "max_iters = " + std::to_string(t.max_iters) + "\n";
    out += "lr_start = " + fmt(t.lr_start) + "\n";
    out += "lr_end = " + fmt(t.lr_end) + "\n";
    out += "seed = " + std::to_string(t.seed) + "\n";
    out += "eval_every = " + std::to_string(t.eval_every) + "\n";
    out += std::string("optimizer = ") +
           (t.optimizer == Optimizer::Adam ? "adaptive-moment" : "plain-sgd") + "\n";
    out += std::string("init = ") +
           (t.init == InitMode::SqrtLiteral ? "sqrt-literal" : "inv-sqrt") + "\n";

    out += "\n[evaluation]\n";
    out += "n_test = " + std::to_string(c.evaluation.n_test) + "\n";
    out += "test_seed = " + std::to_string(c.evaluation.test_seed) + "\n";

    out += "\n[output]\n";
    out += "directory = " + c.output.directory + "\n";
    out += "formats = " + join(c.output.formats) + "\n";
    return out;
}

ProblemInstance build_instance(const ProblemConfig& pc) {
    if (pc.family == "poisson") return build_poisson(pc.d, pc.N);
    if (pc.family == "riesz") return build_riesz(pc.d, pc.N, pc.c, pc.alpha);
    if (pc.family == "queueing") {
        auto inst = build_queueing(pc.d, pc.N, pc.overflow_alpha, pc.lambda, pc.s);
        inst.loss.epsilon = pc.epsilon;
        return inst;
    }
    if (pc.family == "pbn") {
        auto inst = build_pbn(pc.d, pc.shifts, pc.values);
        inst.loss.epsilon = pc.epsilon;
        return inst;
    }
    throw ParamError("unknown problem family '" + pc.family + "'");
}

} // namespace nnsolve
