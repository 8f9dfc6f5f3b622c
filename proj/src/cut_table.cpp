#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>

#include "polyfilter/errors.hpp"
#include "polyfilter/sigma_points.hpp"

#ifndef POLYFILTER_DEFAULT_CUT_TABLE
#define POLYFILTER_DEFAULT_CUT_TABLE "data/cut_rules.txt"
#endif

namespace polyfilter {

namespace {

constexpr const char* kMagic = "polyfilter-cut-table";
constexpr int kVersion = 1;

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_num(const std::string& token) {
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (end == token.c_str() || *end != '\0') throw IoError("cut table: bad number '" + token + "'");
    return v;
}

struct Registry {
    std::mutex mutex;
    bool loaded = false;
    std::map<std::pair<int, int>, CutRule> table;
    std::map<std::pair<int, int>, CutRule> rules;
    std::map<std::pair<int, int>, SigmaSet> sets;
    bool warned_negative = false;

    void load_locked() {
        if (loaded) return;
        loaded = true;
        try {
            for (auto& r : load_cut_table(default_cut_table_path())) table[{r.dim, r.order}] = r;
        } catch (const IoError& e) {
            std::cerr << "polyfilter: " << e.what() << "; CUT rules will be solved on demand\n";
        }
    }

    const CutRule& rule_locked(int n, int c) {
        const std::pair<int, int> key{n, c};
        if (auto it = rules.find(key); it != rules.end()) return it->second;
        load_locked();
        CutRule rule;
        bool have = false;
        if (auto it = table.find(key); it != table.end()) {
            // Table entries are revalidated against the moment equations.
            rule = it->second;
            const double residual = cut_moment_residual(rule);
            have = residual <= 1e-9;
            if (have) rule.residual = residual;
        }
        if (!have) {
            auto solved = solve_cut_rule(n, c);
            if (!solved)
                throw UnsupportedDimension("no CUT" + std::to_string(c) + " rule found for n = " + std::to_string(n));
            rule = *solved;
        }
        if (rule.has_negative_weight() && !warned_negative) {
            warned_negative = true;
            std::cerr << "polyfilter: warning: CUT" << c << " rule for n = " << n
                      << " has negative weights\n";
        }
        return rules.emplace(key, rule).first->second;
    }
};

Registry& registry() {
    static Registry r;
    return r;
}

} // namespace

std::string default_cut_table_path() {
    return POLYFILTER_DEFAULT_CUT_TABLE;
}

std::string format_cut_table(const std::vector<CutRule>& rules) {
    std::ostringstream out;
    out << kMagic << ' ' << kVersion << '\n';
    out << "# rule <n> <order> <center_weight> <residual> <families>\n";
    out << "# family <kind> <radius> <radius2> <weight>\n";
    for (const auto& r : rules) {
        out << "rule " << r.dim << ' ' << r.order << ' ' << num(r.center_weight) << ' ' << num(r.residual) << ' '
            << r.families.size() << '\n';
        for (const auto& f : r.families)
            out << "family " << to_string(f.kind) << ' ' << num(f.radius) << ' ' << num(f.radius2) << ' '
                << num(f.weight) << '\n';
    }
    return out.str();
}

std::vector<CutRule> parse_cut_table(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::vector<CutRule> rules;
    bool header = false;
    std::size_t pending = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (!header) {
            int version = 0;
            ls >> version;
            if (tag != kMagic || version != kVersion) throw IoError("cut table: unsupported header '" + line + "'");
            header = true;
            continue;
        }
        if (tag == "rule") {
            if (pending != 0) throw IoError("cut table: truncated family list");
            std::string cw, res;
            CutRule r;
            ls >> r.dim >> r.order >> cw >> res >> pending;
            if (!ls) throw IoError("cut table: malformed rule line '" + line + "'");
            r.center_weight = parse_num(cw);
            r.residual = parse_num(res);
            rules.push_back(r);
        } else if (tag == "family") {
            if (rules.empty() || pending == 0) throw IoError("cut table: family outside a rule");
            std::string kind, a, b, w;
            ls >> kind >> a >> b >> w;
            if (!ls) throw IoError("cut table: malformed family line '" + line + "'");
            CutFamily f;
            try {
                f.kind = family_from_string(kind);
            } catch (const InvalidArgument& e) {
                throw IoError(std::string("cut table: ") + e.what());
            }
            f.radius = parse_num(a);
            f.radius2 = parse_num(b);
            f.weight = parse_num(w);
            rules.back().families.push_back(f);
            --pending;
        } else {
            throw IoError("cut table: unknown record '" + tag + "'");
        }
    }
    if (!header) throw IoError("cut table: missing header");
    if (pending != 0) throw IoError("cut table: truncated family list");
    return rules;
}

std::vector<CutRule> load_cut_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open CUT table '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_cut_table(buf.str());
}

void save_cut_table(const std::string& path, const std::vector<CutRule>& rules) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write CUT table '" + path + "'");
    out << format_cut_table(rules);
    if (!out) throw IoError("write failed for CUT table '" + path + "'");
}

const CutRule& cut_rule(int dim, int order) {
    cut_kind(order);
    if (dim < 1) throw InvalidArgument("cut_rule: dimension must be >= 1");
    auto& reg = registry();
    std::lock_guard<std::mutex> lock(reg.mutex);
    return reg.rule_locked(dim, order);
}

SigmaSet cut_points(int dim, int order) {
    cut_kind(order);
    if (dim < 1) throw InvalidArgument("cut_points: dimension must be >= 1");
    auto& reg = registry();
    std::lock_guard<std::mutex> lock(reg.mutex);
    const std::pair<int, int> key{dim, order};
    auto it = reg.sets.find(key);
    if (it == reg.sets.end()) it = reg.sets.emplace(key, rule_points(reg.rule_locked(dim, order))).first;
    return it->second;
}

} // namespace polyfilter
