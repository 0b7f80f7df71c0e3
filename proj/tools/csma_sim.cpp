// Command-line front end for the constellation-sharing link simulator.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "csma/csma.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config = 2;
constexpr int exit_runtime = 3;

struct PlanOptions {
    std::uint32_t order = 0;
    std::string lookup;
    std::vector<unsigned> address_positions;
    std::vector<unsigned> qos;

    void add_to(CLI::App* cmd, bool order_required)
    {
        auto* o = cmd->add_option("--order", order, "QAM order (power of 4)");
        if (order_required)
            o->required();
        cmd->add_option("--lookup", lookup, "lookup table file (user_id,data_word,codeword)");
        cmd->add_option("--address-positions", address_positions, "address bit positions, e.g. 3,2")
            ->delimiter(',');
        cmd->add_option("--qos", qos, "per-user data widths, e.g. 3,2,2")->delimiter(',');
    }

    bool any() const { return !lookup.empty() || !address_positions.empty() || !qos.empty(); }

    csma::AllocationPlan build() const
    {
        const int chosen = !lookup.empty() + !address_positions.empty() + !qos.empty();
        if (chosen != 1)
            throw csma::Error(csma::ErrorCode::config,
                              "choose exactly one of --lookup, --address-positions, --qos");
        if (!lookup.empty()) {
            auto plan = csma::load_lookup_plan(lookup);
            if (order != 0 && plan.order() != order)
                throw csma::Error(csma::ErrorCode::mismatch, "lookup table is for order " +
                                                                 std::to_string(plan.order()));
            return plan;
        }
        if (order == 0)
            throw csma::Error(csma::ErrorCode::config, "--order is required");
        if (!address_positions.empty())
            return csma::build_address_bit_plan(csma::AddressBitLayout(order, address_positions));
        return csma::build_qos_plan(order, qos);
    }
};

std::string pad(const std::string& s, std::size_t width)
{
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

void emit(const std::string& out_path, const std::string& text)
{
    if (out_path.empty() || out_path == "-")
        std::cout << text;
    else
        csma::write_file_atomic(out_path, text);
}

int cmd_capacity_table(std::optional<std::uint32_t> order, std::optional<unsigned> bits)
{
    if (order || bits) {
        if (!order || !bits)
            throw csma::Error(csma::ErrorCode::config, "--order and --bits go together");
        std::cout << csma::capacity_enhancement(*order, *bits) << '\n';
        return exit_ok;
    }
    struct Row {
        std::uint32_t order;
        unsigned bits;
    };
    const Row rows[] = {{64, 4}, {64, 3}, {64, 2}, {256, 6}, {256, 4}, {256, 2}, {1024, 8}, {1024, 6}, {1024, 4}};
    std::cout << pad("modulation", 12) << pad("data bits B", 13) << "capacity factor U_c\n";
    for (const auto& r : rows)
        std::cout << pad(std::to_string(r.order) + " QAM", 12) << pad(std::to_string(r.bits), 13)
                  << csma::capacity_enhancement(r.order, r.bits) << '\n';
    return exit_ok;
}

int cmd_map_table(const PlanOptions& opts)
{
    const auto plan = opts.build();
    const unsigned d = plan.bits_per_symbol();
    std::cout << "# user_id,data_word,codeword\n";
    for (const auto& u : plan.users())
        for (std::size_t k = 0; k < u.codewords.size(); ++k)
            std::cout << u.user_id << ',' << csma::to_binary(static_cast<std::uint32_t>(k), u.data_bits) << ','
                      << csma::to_binary(u.codewords[k], d) << '\n';
    return exit_ok;
}

int cmd_constellation_dump(const PlanOptions& opts, const std::string& out)
{
    std::optional<csma::AllocationPlan> plan;
    std::uint32_t order = opts.order;
    if (opts.any()) {
        plan.emplace(opts.build());
        order = plan->order();
    }
    const csma::Constellation c(order);
    std::vector<std::pair<int, csma::Label>> keyed;
    for (csma::Label l = 0; l < order; ++l) {
        int user = -1;
        if (plan)
            if (const auto dm = plan->demap_symbol(l))
                user = dm->user_id;
        keyed.emplace_back(user, l);
    }
    // Grouped by user; unallocated labels (-1) last.
    std::stable_sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
        if ((a.first < 0) != (b.first < 0))
            return b.first < 0;
        return a.first < b.first;
    });
    std::ostringstream os;
    os << "label_binary,I,Q,user_id\n";
    for (const auto& [user, label] : keyed) {
        const auto p = c.point_for_label(label);
        os << csma::to_binary(label, c.bits_per_symbol()) << ',' << csma::format_number(p.real()) << ','
           << csma::format_number(p.imag()) << ',' << user << '\n';
    }
    emit(out, os.str());
    return exit_ok;
}

void print_summary(const std::vector<csma::BerReport>& reports)
{
    for (const auto& rep : reports) {
        std::cout << "run " << rep.name << " (" << rep.order << "-QAM, " << rep.users.size() << " users)\n";
        std::cout << "  " << pad("snr_db", 9) << pad("symbols", 11) << pad("ser", 16) << pad("ber", 16)
                  << pad("theory_ser", 16) << "confusions\n";
        for (std::size_t i = 0; i < rep.point_count(); ++i) {
            const auto& a = rep.aggregate(i);
            std::cout << "  " << pad(csma::format_number(a.snr_db, 6), 9) << pad(std::to_string(a.symbols_sent), 11)
                      << pad(csma::format_number(a.ser(), 6), 16) << pad(csma::format_number(a.ber(), 6), 16)
                      << pad(csma::format_number(a.theory_ser, 6), 16) << a.user_confusions << '\n';
        }
    }
}

struct RunOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> snr_mode;
    std::optional<unsigned> workers;

    void apply(csma::ExperimentConfig& c) const
    {
        if (seed)
            c.seed = *seed;
        if (workers)
            c.workers = *workers;
        if (snr_mode)
            c.sweep.mode = *snr_mode == "symbol" ? csma::SnrMode::per_symbol : csma::SnrMode::per_data_bit;
    }
};

void write_outputs(const std::vector<csma::BerReport>& reports, const std::string& out, const std::string& gnuplot,
                   bool quiet)
{
    emit(out, csma::report_csv_string(reports));
    if (!gnuplot.empty())
        csma::write_file_atomic(gnuplot, csma::gnuplot_script(out, reports));
    if (!quiet && !out.empty() && out != "-")
        print_summary(reports);
}

int cmd_ber_sweep(const std::string& config, const std::string& out, const std::string& gnuplot,
                  const RunOverrides& ov, bool quiet)
{
    if (!std::filesystem::exists(config))
        throw csma::Error(csma::ErrorCode::config, "config file not found: " + config);
    auto configs = csma::load_config(config);
    std::vector<csma::BerReport> reports;
    for (auto& c : configs) {
        ov.apply(c);
        c.validate();
        reports.push_back(csma::run_experiment(c));
    }
    write_outputs(reports, out, gnuplot, quiet);
    return exit_ok;
}

int cmd_user_scaling(const std::string& config, const std::vector<std::uint32_t>& users, const std::string& out,
                     const std::string& gnuplot, const RunOverrides& ov, bool quiet)
{
    csma::ExperimentConfig base;
    base.order = 64;
    base.sweep = {csma::SnrMode::per_data_bit, 0.0, 22.0, 1.0, {}};
    base.stop.max_symbols = 1'000'000;
    base.workers = 0;
    if (!config.empty()) {
        if (!std::filesystem::exists(config))
            throw csma::Error(csma::ErrorCode::config, "config file not found: " + config);
        auto configs = csma::load_config(config);
        if (configs.size() != 1)
            throw csma::Error(csma::ErrorCode::config, "user-scaling takes a single-run template config");
        base = configs.front();
    }
    ov.apply(base);
    const auto reports = csma::compare_user_scaling(base, users);
    write_outputs(reports, out, gnuplot, quiet);
    return exit_ok;
}

int cmd_theory(const std::string& formula, const csma::TheoryParams& params, double start, double stop, double step,
               const std::string& out)
{
    csma::Formula f;
    if (formula == "eq3")
        f = csma::Formula::eq3;
    else if (formula == "eq4")
        f = csma::Formula::eq4;
    else if (formula == "eq5")
        f = csma::Formula::eq5;
    else if (formula == "ber-approx")
        f = csma::Formula::ber_approx;
    else
        throw csma::Error(csma::ErrorCode::config, "unknown formula '" + formula + "'");
    if (!(step > 0.0) || start > stop)
        throw csma::Error(csma::ErrorCode::config, "invalid SNR axis");
    const csma::SweepSpec axis{params.mode, start, stop, step, {}};
    std::ostringstream os;
    csma::write_theory_csv(os, csma::theory_curve(f, params, axis.values()));
    emit(out, os.str());
    return exit_ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Constellation-shared multiple access link simulator"};
    app.require_subcommand(1);

    std::optional<std::uint32_t> cap_order;
    std::optional<unsigned> cap_bits;
    auto* capacity = app.add_subcommand("capacity-table", "user capacity factor for common (M, B) pairs");
    capacity->add_option("--order", cap_order, "QAM order");
    capacity->add_option("--bits", cap_bits, "data bits per user symbol");

    std::uint32_t tr_order = 64;
    unsigned tr_address = 0;
    auto* throughput = app.add_subcommand("throughput", "per-user throughput factor for A address bits");
    throughput->add_option("--order", tr_order, "QAM order")->required();
    throughput->add_option("--address-bits", tr_address, "address bits A")->required();

    std::string formula = "eq3";
    csma::TheoryParams tp;
    double th_start = 0.0, th_stop = 30.0, th_step = 1.0;
    std::string th_mode = "symbol";
    std::string th_out;
    auto* theory = app.add_subcommand("theory", "closed-form error-rate curve as CSV snr_db,ps");
    theory->add_option("--formula", formula, "eq3 | eq4 | eq5 | ber-approx")
        ->check(CLI::IsMember({"eq3", "eq4", "eq5", "ber-approx"}));
    theory->add_option("--order", tp.order, "QAM order (eq3, ber-approx)");
    theory->add_option("--data-bits", tp.data_bits, "data bits B (eq4, eq5)");
    theory->add_option("--address-bits", tp.address_bits, "address bits A (eq5)");
    theory->add_option("--start", th_start, "first SNR in dB");
    theory->add_option("--stop", th_stop, "last SNR in dB");
    theory->add_option("--step", th_step, "SNR step in dB");
    theory->add_option("--snr-mode", th_mode, "symbol | databit")->check(CLI::IsMember({"symbol", "databit"}));
    theory->add_option("--out", th_out, "output path (default stdout)");

    PlanOptions map_opts;
    auto* map_table = app.add_subcommand("map-table", "print a plan as user_id,data_word,codeword rows");
    map_opts.add_to(map_table, false);

    PlanOptions dump_opts;
    std::string dump_out;
    auto* dump = app.add_subcommand("constellation-dump", "labelled constellation points grouped by user");
    dump_opts.add_to(dump, false);
    dump->add_option("--out", dump_out, "output path (default stdout)");

    std::string config_path, out_path, gnuplot_path;
    RunOverrides ov;
    bool quiet = false;
    auto add_run_flags = [&](CLI::App* cmd) {
        cmd->add_option("--out", out_path, "report CSV path (default stdout)");
        cmd->add_option("--seed", ov.seed, "master seed (unsigned 64-bit)");
        cmd->add_option("--snr-mode", ov.snr_mode, "symbol | databit")->check(CLI::IsMember({"symbol", "databit"}));
        cmd->add_option("--workers", ov.workers, "worker threads, 0 = all cores");
        cmd->add_option("--gnuplot", gnuplot_path, "also write a gnuplot script");
        cmd->add_flag("--quiet", quiet, "suppress the summary table");
    };
    auto* sweep = app.add_subcommand("ber-sweep", "Monte Carlo BER/SER sweep from a config file");
    sweep->add_option("--config", config_path, "experiment config")->required();
    add_run_flags(sweep);

    std::vector<std::uint32_t> scaling_users = {1, 4, 8};
    auto* scaling = app.add_subcommand("user-scaling", "BER for 1, 4 and 8 users sharing one modulator");
    scaling->add_option("--config", config_path, "single-run template config (default 64-QAM, databit axis)");
    scaling->add_option("--users", scaling_users, "user counts")->delimiter(',');
    add_run_flags(scaling);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_config;
    }

    try {
        if (*capacity)
            return cmd_capacity_table(cap_order, cap_bits);
        if (*throughput) {
            const auto r = csma::throughput_reduction(tr_order, tr_address);
            std::cout << r.num << '/' << r.den << " (" << csma::format_number(r.value()) << ")\n";
            return exit_ok;
        }
        if (*theory) {
            tp.mode = th_mode == "symbol" ? csma::SnrMode::per_symbol : csma::SnrMode::per_data_bit;
            return cmd_theory(formula, tp, th_start, th_stop, th_step, th_out);
        }
        if (*map_table)
            return cmd_map_table(map_opts);
        if (*dump) {
            if (dump_opts.order == 0 && dump_opts.lookup.empty())
                throw csma::Error(csma::ErrorCode::config, "--order or --lookup is required");
            return cmd_constellation_dump(dump_opts, dump_out);
        }
        if (*sweep)
            return cmd_ber_sweep(config_path, out_path, gnuplot_path, ov, quiet);
        if (*scaling)
            return cmd_user_scaling(config_path, scaling_users, out_path, gnuplot_path, ov, quiet);
    } catch (const csma::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        switch (e.code()) {
        case csma::ErrorCode::config:
        case csma::ErrorCode::invalid_order:
        case csma::ErrorCode::invalid_width:
        case csma::ErrorCode::mismatch:
        case csma::ErrorCode::overlap:
        case csma::ErrorCode::incomplete_table:
        case csma::ErrorCode::overflow:
        case csma::ErrorCode::lookup:
        case csma::ErrorCode::invalid_schedule:
        case csma::ErrorCode::geometry:
        case csma::ErrorCode::spec: return exit_config;
        default: return exit_runtime;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_runtime;
    }
    return exit_ok;
}
