#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "pda/auction.hpp"
#include "pda/bench.hpp"

namespace {

pda::SortAlgorithm parse_sort(const std::string& name) {
  if (name == "sesort") {
    return pda::SortAlgorithm::sesort;
  }
  if (name == "bisort") {
    return pda::SortAlgorithm::bisort;
  }
  if (name == "oesort") {
    return pda::SortAlgorithm::oesort;
  }
  throw CLI::ValidationError("--sort", "must be sesort, bisort or oesort");
}

template <typename T, typename F>
std::vector<T> parse_list(const std::string& csv, F&& convert) {
  std::vector<T> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) {
      out.push_back(convert(item));
    }
  }
  return out;
}

int run_agent_role(const std::string& listen, const pda::AgentConfig& cfg) {
  pda::TcpListener listener(pda::Endpoint::parse(listen));
  std::cerr << "[agent] listening on port " << listener.bound_port() << '\n';
  pda::AgentSession session(cfg);
  pda::TcpChannel channel = listener.accept();
  pda::run_agent_session(session, channel);
  for (const std::string& line : session.log) {
    std::cerr << line << '\n';
  }
  return 0;
}

int run_auctioneer_role(const std::string& listen, const std::string& connect_addr,
                        const pda::SessionConfig& cfg, std::size_t n) {
  pda::TcpChannel agent = pda::TcpChannel::connect(pda::Endpoint::parse(connect_addr));
  const pda::gm::PublicKey pk = pda::agent_handshake(agent, cfg);

  pda::TcpListener bidders(pda::Endpoint::parse(listen));
  std::cerr << "[auctioneer] accepting bids on port " << bidders.bound_port() << '\n';
  pda::CollectedBids collected = pda::collect_bids(bidders, pk, cfg, n, n);

  pda::SessionStats stats;
  stats.fixed_rounds = 1;  // bid collection
  stats.bytes_transferred = collected.bytes;
  pda::RandomSource rng(cfg.seed);
  const pda::AuctionOutcome outcome =
      pda::auction_session(agent, pk, cfg, rng, std::move(collected.sellers),
                           std::move(collected.buyers), &stats, &std::cerr);
  std::cerr << "[auctioneer] rounds=" << stats.rounds() << " and_gates=" << stats.and_gates
            << " bytes=" << stats.bytes_transferred << '\n';
  std::cout << pda::format_outcome(outcome);
  return 0;
}

int run_bidder_role(const std::string& connect_addr, const std::string& side_name,
                    std::uint64_t value, std::uint64_t id, const pda::SessionConfig& cfg) {
  pda::Side side;
  if (side_name == "seller") {
    side = pda::Side::seller;
  } else if (side_name == "buyer") {
    side = pda::Side::buyer;
  } else {
    throw CLI::ValidationError("--side", "must be seller or buyer");
  }
  // Local validation first: nothing leaves the process on overflow.
  if (cfg.bid_bits < 64 && (value >> cfg.bid_bits) != 0) {
    throw pda::OverflowError("bid value does not fit --bitlen");
  }
  pda::RandomSource rng(cfg.seed ^ (id * 0x9e3779b97f4a7c15ull) ^ value);
  pda::TcpChannel auctioneer = pda::TcpChannel::connect(pda::Endpoint::parse(connect_addr));
  pda::run_bidder(auctioneer, side, pda::PlainBid{value, id}, cfg.bid_bits, cfg.id_bits, rng);
  std::cerr << "[bidder] submitted\n";
  return 0;
}

int run_benchmark_role(const pda::BenchmarkGrid& grid, const std::string& csv_path) {
  const std::vector<pda::BenchmarkRow> rows = pda::run_benchmark(grid, &std::cerr);
  std::ofstream csv(csv_path);
  if (!csv) {
    std::cerr << "cannot open " << csv_path << " for writing\n";
    return 2;
  }
  pda::write_benchmark_csv(csv, rows);
  pda::write_benchmark_csv(std::cout, rows);
  std::cerr << "wrote " << rows.size() << " rows to " << csv_path << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Privacy-preserving double auction: GM encryption over sorting networks"};

  std::string role;
  std::string listen = "127.0.0.1:0";
  std::string connect_addr;
  std::string sort_name = "oesort";
  std::string sorts_csv = "sesort,bisort,oesort";
  std::string sizes_csv = "8,16,32,64";
  std::string bitlens_csv = "8,16";
  std::string side;
  std::string csv_path = "benchmark.csv";
  std::size_t bitlen = 8;
  std::size_t idlen = 16;
  std::size_t n = 0;
  std::size_t keybits = 0;  // 0 = role default: full strength for the agent, test keys elsewhere
  std::size_t reps = 10;
  std::uint64_t seed = 0;
  std::uint64_t value = 0;
  std::uint64_t id = 0;

  app.add_option("--role", role, "auctioneer | agent | bidder | benchmark")
      ->required()
      ->envname("PDA_ROLE");
  app.add_option("--listen", listen, "host:port to bind (agent, auctioneer)")
      ->envname("PDA_LISTEN");
  app.add_option("--connect", connect_addr, "peer host:port (auctioneer: agent; bidder: auctioneer)")
      ->envname("PDA_CONNECT");
  app.add_option("--sort", sort_name, "sesort | bisort | oesort")->envname("PDA_SORT");
  app.add_option("--bitlen", bitlen, "bid width L in bits")->envname("PDA_BITLEN");
  app.add_option("--idlen", idlen, "id width L' in bits")->envname("PDA_IDLEN");
  app.add_option("--n", n, "sellers (=buyers) per session")->envname("PDA_N");
  app.add_option("--keybits", keybits,
                 "modulus size; defaults to 1024 for the agent, 64 for benchmarks")
      ->envname("PDA_KEYBITS");
  app.add_option("--seed", seed, "randomness seed")->envname("PDA_SEED");
  app.add_option("--reps", reps, "benchmark repetitions per cell")->envname("PDA_REPS");
  app.add_option("--csv", csv_path, "benchmark output path")->envname("PDA_CSV");
  app.add_option("--side", side, "bidder side: seller | buyer")->envname("PDA_SIDE");
  app.add_option("--value", value, "bidder: bid value")->envname("PDA_VALUE");
  app.add_option("--id", id, "bidder: owner id (1..2^idlen-1)")->envname("PDA_ID");
  app.add_option("--sorts", sorts_csv, "benchmark: comma-separated algorithms")
      ->envname("PDA_SORTS");
  app.add_option("--sizes", sizes_csv, "benchmark: comma-separated n values")
      ->envname("PDA_SIZES");
  app.add_option("--bitlens", bitlens_csv, "benchmark: comma-separated bid widths")
      ->envname("PDA_BITLENS");

  CLI11_PARSE(app, argc, argv);

  try {
    if (keybits == 0) {
      keybits = role == "agent" ? pda::gm::kDefaultKeyBits : 64;
    }
    pda::SessionConfig cfg;
    cfg.bid_bits = bitlen;
    cfg.id_bits = idlen;
    cfg.key_bits = keybits;
    cfg.sort_algorithm = parse_sort(sort_name);
    cfg.seed = seed;

    if (role == "agent") {
      return run_agent_role(listen, pda::AgentConfig{keybits, seed ^ 0xa6e47ull});
    }
    if (role == "auctioneer") {
      if (connect_addr.empty() || n == 0) {
        std::cerr << "auctioneer requires --connect and --n\n";
        return 1;
      }
      return run_auctioneer_role(listen, connect_addr, cfg, n);
    }
    if (role == "bidder") {
      if (connect_addr.empty()) {
        std::cerr << "bidder requires --connect\n";
        return 1;
      }
      return run_bidder_role(connect_addr, side, value, id, cfg);
    }
    if (role == "benchmark") {
      pda::BenchmarkGrid grid;
      grid.algorithms = parse_list<pda::SortAlgorithm>(sorts_csv, parse_sort);
      grid.sizes = parse_list<std::size_t>(
          sizes_csv, [](const std::string& s) { return std::stoull(s); });
      grid.bitlens = parse_list<std::size_t>(
          bitlens_csv, [](const std::string& s) { return std::stoull(s); });
      grid.id_bits = idlen;
      grid.key_bits = keybits;
      grid.reps = reps;
      grid.seed = seed == 0 ? 42 : seed;
      return run_benchmark_role(grid, csv_path);
    }
    std::cerr << "unknown role: " << role << '\n';
    return 1;
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
