#pragma once

#include <cstdlib>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcflab/table.hpp"

namespace mcflab {

enum class Verdict { Pass, Fail, Vacuous };

inline const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Pass: return "pass";
        case Verdict::Fail: return "fail";
        default: return "vacuous";
    }
}

/// A constant that entered a check, with its provenance: "formula"
/// (built-in rule of the method), "fitted", "configured" or "measured".
struct ConstantRecord {
    std::string name;
    double value = 0.0;
    std::string provenance;
};

/// Outcome of one inequality verification: per-sample slack values
/// (RHS - LHS; non-negative means the inequality holds), the tolerance,
/// all constants used with provenance, and a verdict.  A vacuous
/// verdict means the hypothesis side failed; it is never silently
/// upgraded to pass.
struct CheckReport {
    std::string name;
    std::string reference;           // which inequality / identity this certifies
    std::vector<double> slack_times;
    std::vector<double> slacks;
    double tolerance = 0.0;
    Verdict verdict = Verdict::Fail;
    bool hypothesis_failed = false;
    std::size_t vacuous_index = 0;
    std::string vacuous_what;
    std::vector<ConstantRecord> constants;
    std::vector<std::string> notes;

    double min_slack() const {
        double m = std::numeric_limits<double>::infinity();
        for (double s : slacks) m = std::min(m, s);
        return m;
    }

    void add_constant(const std::string& cname, double value, const std::string& prov) {
        if (prov.empty())
            throw std::logic_error("CheckReport: constant without provenance: " + cname);
        constants.push_back({cname, value, prov});
    }

    void mark_vacuous(std::size_t index, const std::string& what) {
        hypothesis_failed = true;
        vacuous_index = index;
        vacuous_what = what;
        verdict = Verdict::Vacuous;
    }

    /// verdict = vacuous if the hypothesis failed, else pass iff
    /// min slack >= -tolerance.
    void decide() {
        if (hypothesis_failed) {
            verdict = Verdict::Vacuous;
            return;
        }
        verdict = min_slack() >= -tolerance ? Verdict::Pass : Verdict::Fail;
    }

    std::string to_text() const {
        std::ostringstream os;
        os << "check: " << name << "\n";
        os << "reference: " << reference << "\n";
        os << "verdict: " << verdict_name(verdict) << "\n";
        os << "tolerance: " << format_double(tolerance) << "\n";
        os << "min_slack: " << format_double(slacks.empty() ? 0.0 : min_slack()) << "\n";
        os << "samples: " << slacks.size() << "\n";
        if (hypothesis_failed)
            os << "vacuous_at: " << vacuous_index << " " << vacuous_what << "\n";
        for (const auto& c : constants)
            os << "constant: " << c.name << " = " << format_double(c.value) << " ["
               << c.provenance << "]\n";
        for (const auto& n : notes) os << "note: " << n << "\n";
        os << "slack_table:\n";
        os << "t,slack\n";
        for (std::size_t i = 0; i < slacks.size(); ++i)
            os << format_double(i < slack_times.size() ? slack_times[i] : double(i)) << ","
               << format_double(slacks[i]) << "\n";
        os << "end\n";
        return os.str();
    }

    static CheckReport from_text(const std::string& text) {
        CheckReport r;
        std::istringstream is(text);
        std::string line;
        bool in_table = false, saw_header = false;
        auto value_of = [](const std::string& l, const char* key) {
            return l.substr(std::string(key).size());
        };
        while (std::getline(is, line)) {
            if (in_table) {
                if (line == "end") break;
                if (!saw_header) {
                    saw_header = true;
                    continue;
                }
                const char* p = line.c_str();
                char* end = nullptr;
                const double t = std::strtod(p, &end);
                if (*end != ',') throw std::invalid_argument("report: bad slack row");
                const double s = std::strtod(end + 1, nullptr);
                r.slack_times.push_back(t);
                r.slacks.push_back(s);
                continue;
            }
            if (line.rfind("check: ", 0) == 0)
                r.name = value_of(line, "check: ");
            else if (line.rfind("reference: ", 0) == 0)
                r.reference = value_of(line, "reference: ");
            else if (line.rfind("verdict: ", 0) == 0) {
                const std::string v = value_of(line, "verdict: ");
                r.verdict = v == "pass"      ? Verdict::Pass
                            : v == "vacuous" ? Verdict::Vacuous
                                             : Verdict::Fail;
                if (v == "vacuous") r.hypothesis_failed = true;
            } else if (line.rfind("tolerance: ", 0) == 0)
                r.tolerance = std::strtod(value_of(line, "tolerance: ").c_str(), nullptr);
            else if (line.rfind("vacuous_at: ", 0) == 0) {
                std::istringstream vs(value_of(line, "vacuous_at: "));
                vs >> r.vacuous_index;
                std::getline(vs, r.vacuous_what);
                if (!r.vacuous_what.empty() && r.vacuous_what.front() == ' ')
                    r.vacuous_what.erase(0, 1);
            } else if (line.rfind("constant: ", 0) == 0) {
                const std::string body = value_of(line, "constant: ");
                const auto eq = body.find(" = ");
                const auto lb = body.find(" [");
                if (eq == std::string::npos || lb == std::string::npos || body.back() != ']')
                    throw std::invalid_argument("report: malformed constant line");
                ConstantRecord c;
                c.name = body.substr(0, eq);
                c.value = std::strtod(body.substr(eq + 3, lb - eq - 3).c_str(), nullptr);
                c.provenance = body.substr(lb + 2, body.size() - lb - 3);
                r.constants.push_back(c);
            } else if (line.rfind("note: ", 0) == 0)
                r.notes.push_back(value_of(line, "note: "));
            else if (line == "slack_table:")
                in_table = true;
        }
        return r;
    }
};

} // namespace mcflab
