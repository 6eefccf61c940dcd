#include "sfcl/runner.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "sfcl/csv.hpp"
#include "sfcl/pgm.hpp"

namespace sfcl {

namespace fs = std::filesystem;

const char* const kRoundsHeader =
    "round,client,r,d_re,mu,sigma,detected_noise_ratio,tau,gamma,lambda,"
    "u_un,u_cons,test_acc,test_dice_loss,test_miou";

namespace {

std::vector<proto::TrainSample> to_train_samples(const std::vector<data::Sample>& in) {
    std::vector<proto::TrainSample> out;
    out.reserve(in.size());
    for (const auto& s : in) {
        proto::TrainSample t;
        t.id = s.id;
        t.corrupted = s.corrupted;
        t.y = s.label;
        t.x = Tensor<proto::real>({1, static_cast<std::uint32_t>(s.image.height),
                                   static_cast<std::uint32_t>(s.image.width)});
        for (size_t i = 0; i < s.image.v.size(); ++i)
            t.x.v[i] = static_cast<proto::real>(s.image.v[i]);
        out.push_back(std::move(t));
    }
    return out;
}

void write_rounds_rows(std::ofstream& out, const proto::RoundReport& rep) {
    for (const auto& c : rep.clients) {
        out << rep.round << ',' << c.client_id << ',' << csv::fmt(c.r) << ','
            << c.d_re << ',' << csv::fmt(c.mu) << ',' << csv::fmt(c.sigma) << ','
            << csv::fmt(c.detected_noise_ratio) << ',' << csv::fmt(rep.tau) << ','
            << csv::fmt(rep.gamma) << ',' << csv::fmt(rep.lambda) << ','
            << csv::fmt(c.u_un) << ',' << csv::fmt(c.u_cons) << ",,,\n";
    }
    out << rep.round << ",global,,,,,," << csv::fmt(rep.tau) << ','
        << csv::fmt(rep.gamma) << ',' << csv::fmt(rep.lambda) << ','
        << csv::fmt(rep.u_un) << ',' << csv::fmt(rep.u_cons) << ',';
    if (rep.has_test)
        out << csv::fmt(rep.test_acc) << ',' << csv::fmt(rep.test_dice_loss) << ','
            << csv::fmt(rep.test_miou);
    else
        out << ",,";
    out << '\n';
}

void write_final_csv(const std::string& path, const RunConfig& cfg,
                     const metrics::MetricSet& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("runner: cannot write " + path);
    out << "mode,accuracy,dice_loss,mean_iou,precision,recall";
    for (size_t k = 0; k < m.per_class_iou.size(); ++k) out << ",iou_" << k;
    out << '\n';
    out << proto::mode_name(cfg.mode) << ',' << csv::fmt(m.accuracy) << ','
        << csv::fmt(m.dice_loss) << ',' << csv::fmt(m.mean_iou) << ','
        << csv::fmt(m.precision) << ',' << csv::fmt(m.recall);
    for (double iou : m.per_class_iou) out << ',' << csv::fmt(iou);
    out << '\n';
}

void dump_dataset(const std::string& dir, const data::Federation& fed) {
    fs::create_directories(dir);
    std::ofstream manifest(dir + "/manifest.csv", std::ios::binary);
    manifest << "sample_id,client,corrupted\n";
    auto dump_one = [&](const data::Sample& s, const std::string& client) {
        char name[64];
        std::snprintf(name, sizeof(name), "%05u", s.id);
        pgm::write_image(dir + "/img_" + name + ".pgm", s.image);
        pgm::write_label(dir + "/label_" + name + ".pgm", s.label);
        manifest << s.id << ',' << client << ',' << (s.corrupted ? 1 : 0) << '\n';
    };
    for (size_t ci = 0; ci < fed.clients.size(); ++ci)
        for (const auto& s : fed.clients[ci]) dump_one(s, std::to_string(ci));
    for (const auto& s : fed.test) dump_one(s, "test");
}

// Fig. 3-style qualitative dump: clean / given (corrupted) / corrected
// labels for a few corrupted training samples, using the final global
// teacher and the owning client's final student.
void dump_labels_before_after(const std::string& dir, const RunConfig& cfg,
                              const data::Federation& fed,
                              const std::vector<proto::ClientState>& clients,
                              const proto::ServerState& server) {
    if (cfg.dump_label_samples <= 0) return;
    fs::create_directories(dir);
    int dumped = 0;
    for (size_t ci = 0; ci < fed.clients.size() && dumped < cfg.dump_label_samples;
         ++ci) {
        for (size_t si = 0;
             si < fed.clients[ci].size() && dumped < cfg.dump_label_samples; ++si) {
            const data::Sample& s = fed.clients[ci][si];
            if (!s.corrupted) continue;
            const auto clean =
                data::generate_scene(cfg.scene,
                                     derive_seed(cfg.master_seed, seed_tag::scene, s.id));
            const proto::TrainSample& ts = clients[ci].data[si];
            const auto probs_s = nn::forward_monolithic(clients[ci].student, ts.x);
            const auto probs_t = nn::forward_monolithic(server.teacher, ts.x);
            const LabelMask corrected =
                proto::correct_labels(probs_s, probs_t, s.label, cfg.label_T);
            char name[64];
            std::snprintf(name, sizeof(name), "%05u", s.id);
            pgm::write_image(dir + "/sample_" + name + "_image.pgm", s.image);
            pgm::write_label(dir + "/sample_" + name + "_clean.pgm", clean.second);
            pgm::write_label(dir + "/sample_" + name + "_given.pgm", s.label);
            pgm::write_label(dir + "/sample_" + name + "_corrected.pgm", corrected);
            ++dumped;
        }
    }
}

}  // namespace

RunResult run_experiment(const RunConfig& cfg_in, const std::string& out_dir_arg,
                         bool deterministic, bool quiet) {
    RunConfig cfg = cfg_in;
    cfg.validate();
    const std::string out_dir = out_dir_arg.empty() ? cfg.out_dir : out_dir_arg;
    fs::create_directories(out_dir);

    const int saved_threads = sfcl::max_threads();
    if (deterministic) sfcl::set_max_threads(1);

    RunResult result;
    try {
        const data::Federation fed =
            data::build_federation(cfg.scene, cfg.layout, cfg.noise, cfg.master_seed);
        if (cfg.dump_dataset) dump_dataset(out_dir + "/dataset", fed);

        const proto::ProtoConfig pcfg = cfg.to_proto();
        std::vector<proto::ClientState> clients(fed.clients.size());
        for (size_t i = 0; i < fed.clients.size(); ++i) {
            clients[i].id = static_cast<int>(i);
            clients[i].data = to_train_samples(fed.clients[i]);
            clients[i].u_un = cfg.logit_init;
            clients[i].u_cons = cfg.logit_init;
        }
        const std::vector<proto::TrainSample> test_set = to_train_samples(fed.test);

        proto::ServerState server = proto::make_server(pcfg);
        proto::Transport transport(static_cast<int>(clients.size()));

        std::ofstream rounds(out_dir + "/rounds.csv", std::ios::binary);
        if (!rounds) throw Error("runner: cannot write " + out_dir + "/rounds.csv");
        rounds << kRoundsHeader << '\n';

        for (int round = 0; round < cfg.global_rounds; ++round) {
            proto::RoundReport rep = proto::run_round(server, clients, transport, pcfg);
            const bool last = round == cfg.global_rounds - 1;
            if (last || (round + 1) % cfg.eval_every == 0) {
                const metrics::MetricSet m = metrics::evaluate(server.teacher, test_set);
                rep.has_test = true;
                rep.test_acc = m.accuracy;
                rep.test_dice_loss = m.dice_loss;
                rep.test_miou = m.mean_iou;
                if (last) result.final_metrics = m;
            }
            write_rounds_rows(rounds, rep);
            if (!quiet) {
                std::printf("round %3ld/%d  tau=%.4f", rep.round + 1, cfg.global_rounds,
                            rep.tau);
                if (rep.has_test) std::printf("  test_miou=%.4f", rep.test_miou);
                for (const auto& c : rep.clients)
                    std::printf("  c%d:%.0f%%", c.client_id,
                                100.0 * c.detected_noise_ratio);
                std::printf("\n");
                std::fflush(stdout);
            }
            result.reports.push_back(std::move(rep));
        }
        rounds.close();

        write_final_csv(out_dir + "/final.csv", cfg, result.final_metrics);
        dump_labels_before_after(out_dir + "/labels_before_after", cfg, fed, clients,
                                 server);
    } catch (...) {
        sfcl::set_max_threads(saved_threads);
        throw;
    }
    sfcl::set_max_threads(saved_threads);
    return result;
}

std::string compare_modes(const std::vector<std::string>& run_dirs) {
    if (run_dirs.empty()) throw MissingRun("compare: no run directories given");
    std::string header;
    std::string body;
    for (const auto& dir : run_dirs) {
        const std::string path = dir + "/final.csv";
        if (!fs::exists(path)) throw MissingRun("compare: missing " + path);
        const auto rows = csv::read(path);
        if (rows.size() < 2) throw MissingRun("compare: malformed " + path);
        std::string h = "run,";
        for (size_t i = 0; i < rows[0].size(); ++i)
            h += rows[0][i] + (i + 1 < rows[0].size() ? "," : "");
        if (header.empty()) header = h;
        else if (header != h) throw MissingRun("compare: column mismatch in " + path);
        body += dir + ",";
        for (size_t i = 0; i < rows[1].size(); ++i)
            body += rows[1][i] + (i + 1 < rows[1].size() ? "," : "");
        body += "\n";
    }
    return header + "\n" + body;
}

}  // namespace sfcl
