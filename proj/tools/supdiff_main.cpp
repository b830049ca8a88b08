// command line front end: evaluate suprema, print active sets, build
// subdifferential generator sets, certify formulas against the oracle, and
// run the cutting-plane solver. Exit codes: 0 all pass, 1 formula violated,
// 2 hypothesis unmet, 3 solver hit the iteration cap, 64 usage or parse.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <supdiff/scenario.hpp>

namespace {

supdiff::Vec parse_point(const std::string& csv) {
    supdiff::Vec x;
    std::stringstream ss(csv);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            std::size_t used = 0;
            x.push_back(std::stod(cell, &used));
            while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used])))
                ++used;
            if (used != cell.size()) throw std::invalid_argument(cell);
        } catch (const std::exception&) {
            throw supdiff::ScenarioError("--point: cannot parse coordinate \"" + cell + "\"");
        }
    }
    if (x.empty()) throw supdiff::ScenarioError("--point: expected comma-separated coordinates");
    return x;
}

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw supdiff::ScenarioError("cannot open output file: " + out_path);
    out << text;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"pointwise suprema of convex families: evaluation, subdifferential "
                 "certification, cutting-plane minimization"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    std::string scenario_path, point_csv, theorem_id, out_path;
    std::string format = "text";
    std::vector<std::string> scenario_paths;
    double eps0 = -1.0;
    std::size_t jobs = 1;

    auto add_point_opts = [&](CLI::App* cmd) {
        cmd->add_option("--scenario", scenario_path, "scenario JSON file")->required();
        cmd->add_option("--point", point_csv, "query point, comma separated")->required();
    };

    CLI::App* c_eval = app.add_subcommand("eval", "evaluate the supremum and active sets");
    add_point_opts(c_eval);
    c_eval->add_option("--eps0", eps0, "enlargement for the second active set");

    CLI::App* c_active = app.add_subcommand("active-set", "print active index sets");
    add_point_opts(c_active);
    c_active->add_option("--eps0", eps0, "enlargement for the second active set");

    CLI::App* c_subdiff = app.add_subcommand("subdiff", "generator set of the subdifferential");
    add_point_opts(c_subdiff);
    c_subdiff->add_option("--theorem", theorem_id, "formula to use instead of the oracle");

    CLI::App* c_certify = app.add_subcommand("certify", "certify formulas against the oracle");
    c_certify->add_option("--scenario", scenario_paths, "scenario JSON files")->required();
    c_certify->add_option("--jobs", jobs, "parallel scenario workers");
    c_certify->add_option("--out", out_path, "write the report here instead of stdout");
    c_certify->add_option("--format", format, "json or text")
        ->check(CLI::IsMember({"json", "text"}));

    CLI::App* c_sip = app.add_subcommand("sip", "minimize the supremum by cutting planes");
    c_sip->add_option("--scenario", scenario_path, "scenario JSON file with a sip block")
        ->required();
    c_sip->add_option("--out", out_path, "append the run report here");
    c_sip->add_option("--format", format, "json or text")->check(CLI::IsMember({"json", "text"}));

    CLI::App* c_report = app.add_subcommand("report", "render a report JSON as text");
    c_report->add_option("--scenario", scenario_path, "report JSON file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 64;
    }

    try {
        if (*c_eval || *c_active) {
            supdiff::Scenario s = supdiff::load_scenario(scenario_path);
            std::optional<double> e0;
            if (eps0 >= 0.0) e0 = eps0;
            supdiff::CmdOutcome r = *c_eval ? supdiff::cmd_eval(s, parse_point(point_csv), e0)
                                            : supdiff::cmd_active_set(s, parse_point(point_csv), e0);
            std::cout << r.text;
            return r.exit_code;
        }
        if (*c_subdiff) {
            supdiff::Scenario s = supdiff::load_scenario(scenario_path);
            std::optional<supdiff::TheoremId> id;
            if (!theorem_id.empty()) {
                try {
                    id = supdiff::theorem_from_name(theorem_id);
                } catch (const std::invalid_argument& e) {
                    std::cerr << e.what() << "\n";
                    return 64;
                }
            }
            supdiff::CmdOutcome r = supdiff::cmd_subdiff(s, parse_point(point_csv), id);
            std::cout << r.text;
            return r.exit_code;
        }
        if (*c_certify) {
            std::vector<supdiff::Scenario> scenarios;
            for (const std::string& p : scenario_paths)
                scenarios.push_back(supdiff::load_scenario(p));
            supdiff::CertifyOutcome r = supdiff::cmd_certify(scenarios, jobs);
            if (format == "json")
                emit(supdiff::report_to_json(r.report).dump(2) + "\n", out_path);
            else
                emit(supdiff::report_to_text(r.report), out_path);
            return r.exit_code;
        }
        if (*c_sip) {
            supdiff::Scenario s = supdiff::load_scenario(scenario_path);
            supdiff::SIPOutcome r = supdiff::cmd_sip(s);
            supdiff::RunReport rep;
            rep.sips.push_back({s.name, r.result});
            if (format == "json")
                emit(supdiff::report_to_json(rep).dump(2) + "\n", out_path);
            else {
                std::cout << r.text;
                if (!out_path.empty())
                    emit(supdiff::report_to_json(rep).dump(2) + "\n", out_path);
            }
            return r.exit_code;
        }
        if (*c_report) {
            supdiff::RunReport rep = supdiff::load_report(scenario_path);
            std::cout << supdiff::report_to_text(rep);
            return 0;
        }
    } catch (const supdiff::ScenarioError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 64;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 70;
    }
    return 64;
}
