#include "sfcl/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sfcl/rng.hpp"

namespace sfcl::proto {

namespace {

std::vector<const Tensor<real>*> param_tensors(const nn::SplitParams<real>& p) {
    std::vector<const Tensor<real>*> out;
    nn::for_each_tensor(p, [&](const Tensor<real>& t) { out.push_back(&t); });
    return out;
}

// Expected tensor shapes, used to validate decoded parameter streams.
nn::SplitParams<real> shaped_params(const nn::NetConfig& net) {
    nn::SplitParams<real> p;
    p.fe = {Tensor<real>({net.fe_channels, net.in_channels, 3, 3}),
            Tensor<real>({net.fe_channels})};
    p.s = {Tensor<real>({net.s_channels, net.fe_channels, 3, 3}),
           Tensor<real>({net.s_channels}),
           Tensor<real>({net.fe_channels, net.s_channels, 3, 3}),
           Tensor<real>({net.fe_channels})};
    p.be = {Tensor<real>({net.classes, net.fe_channels, 3, 3}),
            Tensor<real>({net.classes})};
    return p;
}

void append_params(wire::Bytes& msg, const nn::SplitParams<real>& p) {
    nn::for_each_tensor(p, [&](const Tensor<real>& t) {
        const wire::Bytes b = wire::encode_tensor(t);
        msg.insert(msg.end(), b.begin(), b.end());
    });
}

void append_meta(wire::Bytes& msg, const std::vector<double>& meta) {
    Tensor<double> t({static_cast<std::uint32_t>(meta.size())});
    t.v = meta;
    const wire::Bytes b = wire::encode_tensor(t);
    msg.insert(msg.end(), b.begin(), b.end());
}

struct Cursor {
    const std::uint8_t* p;
    std::size_t left;
    wire::AnyTensor next() {
        std::size_t used = 0;
        wire::AnyTensor t = wire::decode_tensor(p, left, &used);
        p += used;
        left -= used;
        return t;
    }
    void done() const {
        if (left != 0) throw WireError("wire: trailing bytes in message");
    }
};

nn::SplitParams<real> read_params(Cursor& cur, const nn::NetConfig& net) {
    nn::SplitParams<real> p = shaped_params(net);
    nn::for_each_tensor(p, [&](Tensor<real>& t) {
        Tensor<real> got = wire::expect_f64(cur.next());
        if (got.shape != t.shape) throw WireError("wire: parameter shape mismatch");
        t = std::move(got);
    });
    return p;
}

std::vector<double> read_meta(Cursor& cur, std::size_t expect) {
    Tensor<double> t = wire::expect_f64(cur.next());
    if (t.shape.size() != 1 || t.v.size() != expect)
        throw WireError("wire: bad meta block");
    return t.v;
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

const char* mode_name(Mode m) {
    switch (m) {
        case Mode::splitfed_cl: return "splitfed_cl";
        case Mode::fedavg: return "fedavg";
        case Mode::no_correction: return "no_correction";
        case Mode::no_consistency: return "no_consistency";
    }
    return "?";
}

Mode mode_from_name(const std::string& s) {
    if (s == "splitfed_cl") return Mode::splitfed_cl;
    if (s == "fedavg") return Mode::fedavg;
    if (s == "no_correction") return Mode::no_correction;
    if (s == "no_consistency") return Mode::no_consistency;
    throw ConfigError("unknown mode: " + s);
}

Partition split_reliable(const std::vector<double>& student_losses,
                         const std::vector<double>& teacher_losses, double tau) {
    Partition p;
    for (size_t k = 0; k < student_losses.size(); ++k) {
        const bool s_ok = student_losses[k] <= tau;
        const bool t_ok = teacher_losses[k] <= tau;
        if (s_ok && t_ok)
            p.reliable.push_back(static_cast<int>(k));
        else if (!s_ok && !t_ok)
            p.unreliable.push_back(static_cast<int>(k));
        else
            p.undecided.push_back(static_cast<int>(k));
    }
    return p;
}

double warmup(long t, long warmup_rounds) {
    if (warmup_rounds < 1) throw Error("warmup: warmup_rounds must be >= 1");
    if (t <= 0) return 0.0;
    return std::min(1.0, static_cast<double>(t) / static_cast<double>(warmup_rounds));
}

std::pair<double, double> schedule_step(long round_index) {
    const double f = std::min(1.0, static_cast<double>(round_index) / 50.0);
    return {1.0 + 4.0 * f, 3.0 * (1.0 - f)};
}

ServerState make_server(const ProtoConfig& cfg) {
    ServerState s;
    s.teacher = nn::init_params<real>(cfg.net,
                                      derive_seed(cfg.master_seed, seed_tag::params));
    s.student_init = s.teacher;
    s.tau = cfg.tau0;
    s.u_un = cfg.logit_init;
    s.u_cons = cfg.logit_init;
    return s;
}

wire::Bytes encode_broadcast(const Broadcast& b) {
    wire::Bytes msg;
    append_meta(msg, {static_cast<double>(b.round), b.tau, b.gamma, b.lambda, b.s_t,
                      b.u_un, b.u_cons});
    append_params(msg, b.teacher);
    append_params(msg, b.student_init);
    return msg;
}

Broadcast decode_broadcast(const wire::Bytes& msg, const nn::NetConfig& net) {
    Cursor cur{msg.data(), msg.size()};
    const std::vector<double> meta = read_meta(cur, 7);
    Broadcast b;
    b.round = static_cast<long>(meta[0]);
    b.tau = meta[1];
    b.gamma = meta[2];
    b.lambda = meta[3];
    b.s_t = meta[4];
    b.u_un = meta[5];
    b.u_cons = meta[6];
    b.teacher = read_params(cur, net);
    b.student_init = read_params(cur, net);
    cur.done();
    return b;
}

wire::Bytes encode_summary(const ClientSummary& s) {
    wire::Bytes msg;
    append_meta(msg, {static_cast<double>(s.client_id),
                      static_cast<double>(s.total_samples),
                      static_cast<double>(s.d_re), static_cast<double>(s.d_un),
                      static_cast<double>(s.undecided), s.mean_reliable_loss, s.mu,
                      s.sigma, s.u_un, s.u_cons,
                      static_cast<double>(s.empty_batch_recoveries)});
    append_params(msg, s.params);
    return msg;
}

ClientSummary decode_summary(const wire::Bytes& msg, const nn::NetConfig& net) {
    Cursor cur{msg.data(), msg.size()};
    const std::vector<double> meta = read_meta(cur, 11);
    ClientSummary s;
    s.client_id = static_cast<int>(meta[0]);
    s.total_samples = static_cast<long>(meta[1]);
    s.d_re = static_cast<long>(meta[2]);
    s.d_un = static_cast<long>(meta[3]);
    s.undecided = static_cast<long>(meta[4]);
    s.mean_reliable_loss = meta[5];
    s.mu = meta[6];
    s.sigma = meta[7];
    s.u_un = meta[8];
    s.u_cons = meta[9];
    s.empty_batch_recoveries = static_cast<long>(meta[10]);
    s.params = read_params(cur, net);
    cur.done();
    return s;
}

ClientSummary local_train(ClientState& client, const Broadcast& b,
                          const ProtoConfig& cfg) {
    const bool fedavg = cfg.mode == Mode::fedavg;
    const bool use_cons = cfg.mode == Mode::splitfed_cl || cfg.mode == Mode::no_correction;
    const bool use_corr = cfg.mode == Mode::splitfed_cl || cfg.mode == Mode::no_consistency;

    client.student = b.student_init;
    if (!fedavg) client.teacher_local = b.teacher;
    client.u_un = b.u_un;
    client.u_cons = b.u_cons;

    nn::AdamState<real> opt = nn::make_adam_state(client.student);
    nn::ScalarAdam opt_un, opt_cons;

    const long n = static_cast<long>(client.data.size());
    if (n == 0) throw Error("local_train: client dataset is empty");

    ClientSummary summary;
    summary.client_id = client.id;
    summary.total_samples = n;

    std::vector<double> final_losses;
    double reliable_loss_sum = 0.0;

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.local_epochs; ++epoch) {
        const bool last_epoch = epoch == cfg.local_epochs - 1;
        auto rng = make_rng(derive_seed(cfg.master_seed, seed_tag::shuffle,
                                        static_cast<std::uint64_t>(client.id),
                                        static_cast<std::uint64_t>(b.round),
                                        static_cast<std::uint64_t>(epoch)));
        std::shuffle(order.begin(), order.end(), rng);

        for (long start = 0, batch_idx = 0; start < n;
             start += cfg.batch_size, ++batch_idx) {
            const long end = std::min(n, start + cfg.batch_size);
            const long bs = end - start;
            std::vector<Tensor<real>> xs(bs);
            std::vector<LabelMask> labels(bs);
            for (long i = 0; i < bs; ++i) {
                xs[i] = client.data[order[start + i]].x;
                labels[i] = client.data[order[start + i]].y;
            }

            auto caches = nn::forward_split(client.student, xs);
            std::vector<double> student_losses(bs);
            for (long i = 0; i < bs; ++i)
                student_losses[i] =
                    static_cast<double>(nn::dice_loss(caches[i].probs, labels[i]));

            std::vector<Tensor<real>> tprobs;
            std::vector<double> teacher_losses = student_losses;
            if (!fedavg) {
                tprobs.resize(bs);
                const int bsi = static_cast<int>(bs);
#pragma omp parallel for num_threads(sfcl::max_threads()) schedule(dynamic) if (sfcl::max_threads() > 1)
                for (int i = 0; i < bsi; ++i)
                    tprobs[i] = nn::forward_monolithic(client.teacher_local, xs[i]);
                for (long i = 0; i < bs; ++i)
                    teacher_losses[i] =
                        static_cast<double>(nn::dice_loss(tprobs[i], labels[i]));
            }

            Partition part = split_reliable(student_losses, teacher_losses, b.tau);
            if (part.reliable.empty() && part.unreliable.empty()) {
                // EmptyBatch recovery: treat the whole batch as reliable.
                part.reliable.resize(bs);
                std::iota(part.reliable.begin(), part.reliable.end(), 0);
                part.undecided.clear();
                ++summary.empty_batch_recoveries;
            }

            std::vector<LabelMask> corrected = labels;
            if (use_corr)
                for (int k : part.unreliable)
                    corrected[k] = correct_labels(caches[k].probs, tprobs[k], labels[k],
                                                  cfg.label_T);

            std::vector<nn::ForwardCache<real>> pcaches;
            if (use_cons) {
                const auto xp = nn::perturb(
                    xs,
                    derive_seed(cfg.master_seed, seed_tag::perturb,
                                static_cast<std::uint64_t>(client.id),
                                static_cast<std::uint64_t>(b.round),
                                static_cast<std::uint64_t>(epoch) * 100000 + batch_idx),
                    cfg.noise_std, cfg.brightness);
                pcaches = nn::forward_split(client.student, xp);
            }

            // Raw term values, needed up front to seed the EMA scales.
            double raw_re = 0.0, raw_un = 0.0, raw_cons = 0.0;
            long n_re = 0;
            for (int k : part.reliable) { raw_re += student_losses[k]; ++n_re; }
            for (int k : part.undecided) { raw_re += student_losses[k]; ++n_re; }
            if (n_re) raw_re /= n_re;
            if (!part.unreliable.empty()) {
                for (int k : part.unreliable)
                    raw_un += static_cast<double>(
                        nn::dice_loss(caches[k].probs, corrected[k]));
                raw_un /= part.unreliable.size();
            }
            if (use_cons) {
                std::vector<const Tensor<real>*> sp, tp;
                for (long i = 0; i < bs; ++i) {
                    sp.push_back(&pcaches[i].probs);
                    tp.push_back(&tprobs[i]);
                }
                raw_cons = static_cast<double>(nn::consistency_loss(sp, tp));
            }

            const double s_re = fedavg ? 1.0 : LossScales::resolve(client.scales.re, raw_re);
            const double s_un = part.unreliable.empty()
                                    ? 1.0
                                    : LossScales::resolve(client.scales.un, raw_un);
            const double s_cons =
                use_cons ? LossScales::resolve(client.scales.cons, raw_cons) : 1.0;
            const double s_t = fedavg ? 0.0 : b.s_t;
            const double eta = fedavg ? 0.0 : cfg.eta;

            auto res = compute_total_loss(client.student, caches, tprobs, pcaches, part,
                                          labels, corrected, client.u_un, client.u_cons,
                                          s_t, s_re, s_un, s_cons, eta, use_cons);

            if (!fedavg) {
                LossScales::update(client.scales.re, raw_re, cfg.loss_ema_decay);
                if (!part.unreliable.empty())
                    LossScales::update(client.scales.un, raw_un, cfg.loss_ema_decay);
                if (use_cons)
                    LossScales::update(client.scales.cons, raw_cons, cfg.loss_ema_decay);
            }

            nn::adam_step(client.student, res.grads, opt, static_cast<real>(cfg.lr));
            if (!fedavg) {
                opt_un.step(client.u_un, res.du_un, cfg.logit_lr);
                opt_cons.step(client.u_cons, res.du_cons, cfg.logit_lr);
                nn::ema_update(client.teacher_local, client.student,
                               static_cast<real>(cfg.teacher_ema_decay));
            }

            if (last_epoch) {
                final_losses.insert(final_losses.end(), student_losses.begin(),
                                    student_losses.end());
                summary.d_re += static_cast<long>(part.reliable.size());
                summary.d_un += static_cast<long>(part.unreliable.size());
                summary.undecided += static_cast<long>(part.undecided.size());
                for (int k : part.reliable) reliable_loss_sum += student_losses[k];
            }
        }
    }

    double mu = 0.0;
    for (double l : final_losses) mu += l;
    mu /= final_losses.size();
    double var = 0.0;
    for (double l : final_losses) var += (l - mu) * (l - mu);
    var /= final_losses.size();

    summary.mu = mu;
    summary.sigma = std::sqrt(var);
    summary.mean_reliable_loss =
        summary.d_re ? reliable_loss_sum / summary.d_re : mu;
    summary.u_un = client.u_un;
    summary.u_cons = client.u_cons;
    summary.params = client.student;
    return summary;
}

AggregateResult aggregate(const std::vector<ClientSummary>& summaries, double gamma,
                          bool sample_count_weights) {
    const size_t n = summaries.size();
    if (n == 0) throw Error("aggregate: no client summaries");

    AggregateResult out;
    out.r.assign(n, 0.0);
    out.q.assign(n, 0.0);

    long total_d = 0, total_m = 0;
    for (const auto& s : summaries) {
        total_d += s.d_re;
        total_m += s.total_samples;
    }

    if (sample_count_weights || total_d == 0) {
        for (size_t i = 0; i < n; ++i) {
            out.r[i] = static_cast<double>(summaries[i].total_samples) / total_m;
            out.q[i] = out.r[i];
        }
    } else {
        double mx = -kInf;
        for (const auto& s : summaries) mx = std::max(mx, -gamma * s.mean_reliable_loss);
        double z = 0.0;
        for (size_t i = 0; i < n; ++i) {
            out.q[i] = std::exp(-gamma * summaries[i].mean_reliable_loss - mx);
            z += out.q[i];
        }
        for (auto& qi : out.q) qi /= z;

        double qd = 0.0;
        std::vector<double> d(n);
        for (size_t i = 0; i < n; ++i) {
            d[i] = static_cast<double>(summaries[i].d_re) / total_d;
            qd += out.q[i] * d[i];
        }
        for (size_t i = 0; i < n; ++i) out.r[i] = out.q[i] * d[i] / qd;
    }

    // Weighted average of parameters and logits, accumulated in double.
    out.params = summaries[0].params;
    std::vector<std::vector<const Tensor<real>*>> srcs(n);
    for (size_t i = 0; i < n; ++i) srcs[i] = param_tensors(summaries[i].params);
    size_t k = 0;
    nn::for_each_tensor(out.params, [&](Tensor<real>& t) {
        for (size_t j = 0; j < t.v.size(); ++j) {
            double acc = 0.0;
            for (size_t i = 0; i < n; ++i)
                acc += out.r[i] * static_cast<double>(srcs[i][k]->v[j]);
            t.v[j] = static_cast<real>(acc);
        }
        ++k;
    });
    out.u_un = 0.0;
    out.u_cons = 0.0;
    for (size_t i = 0; i < n; ++i) {
        out.u_un += out.r[i] * summaries[i].u_un;
        out.u_cons += out.r[i] * summaries[i].u_cons;
    }
    return out;
}

double update_tau(const std::vector<ClientSummary>& summaries,
                  const std::vector<double>& q, double lambda) {
    double tau = 0.0;
    for (size_t i = 0; i < summaries.size(); ++i)
        tau += q[i] * (summaries[i].mu + lambda * summaries[i].sigma);
    return tau;
}

RoundReport run_round(ServerState& server, std::vector<ClientState>& clients,
                      Transport& transport, const ProtoConfig& cfg) {
    const auto [gamma, lambda] = schedule_step(server.round);
    const double s_t = warmup(server.round, cfg.warmup_rounds);
    const bool fedavg = cfg.mode == Mode::fedavg;

    Broadcast b;
    b.round = server.round;
    b.tau = fedavg ? kInf : server.tau;
    b.gamma = gamma;
    b.lambda = lambda;
    b.s_t = s_t;
    b.u_un = server.u_un;
    b.u_cons = server.u_cons;
    b.teacher = server.teacher;
    b.student_init = server.student_init;
    const wire::Bytes bmsg = encode_broadcast(b);
    for (auto& ch : transport.down) ch.send(bmsg);

    // Strict round barrier: all summaries arrive before aggregation.
    for (size_t i = 0; i < clients.size(); ++i) {
        const Broadcast bi = decode_broadcast(transport.down[i].recv(), cfg.net);
        ClientSummary s = local_train(clients[i], bi, cfg);
        transport.up[i].send(encode_summary(s));
    }
    std::vector<ClientSummary> summaries;
    summaries.reserve(clients.size());
    for (size_t i = 0; i < clients.size(); ++i)
        summaries.push_back(decode_summary(transport.up[i].recv(), cfg.net));

    AggregateResult agg = aggregate(summaries, gamma, fedavg);
    const double tau_next = fedavg ? kInf : update_tau(summaries, agg.q, lambda);

    RoundReport report;
    report.round = server.round;
    report.tau = b.tau;
    report.tau_next = tau_next;
    report.gamma = gamma;
    report.lambda = lambda;
    report.s_t = s_t;
    report.u_un = agg.u_un;
    report.u_cons = agg.u_cons;
    for (size_t i = 0; i < summaries.size(); ++i) {
        const auto& s = summaries[i];
        ClientRoundStats cs;
        cs.client_id = s.client_id;
        cs.total = s.total_samples;
        cs.d_re = s.d_re;
        cs.d_un = s.d_un;
        cs.undecided = s.undecided;
        cs.r = agg.r[i];
        cs.q = agg.q[i];
        cs.mu = s.mu;
        cs.sigma = s.sigma;
        cs.mean_reliable_loss = s.mean_reliable_loss;
        cs.detected_noise_ratio = s.detected_noise_ratio();
        cs.u_un = s.u_un;
        cs.u_cons = s.u_cons;
        cs.empty_batch_recoveries = s.empty_batch_recoveries;
        report.clients.push_back(cs);
    }

    server.teacher = agg.params;
    server.student_init = agg.params;
    server.u_un = agg.u_un;
    server.u_cons = agg.u_cons;
    server.tau = tau_next;
    ++server.round;
    return report;
}

}  // namespace sfcl::proto
