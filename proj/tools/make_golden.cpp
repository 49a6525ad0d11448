// Regenerates the files under tests/data. Run after an intentional change to
// the synthetic session, the fusion math or the wire encoding:
//   make_golden tests/data

#include "affect/config.hpp"
#include "affect/session.hpp"
#include "affect/wire.hpp"

#include "../tests/messages.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace affect;

namespace {

std::ofstream open_out(const fs::path& p)
{
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error("cannot write " + p.string());
    return out;
}

} // namespace

int main(int argc, char** argv)
{
    if (argc != 2) {
        std::cerr << "usage: make_golden <data-dir>\n";
        return 2;
    }
    try {
        const fs::path dir = argv[1];
        fs::create_directories(dir);
        const auto cfg = DaemonConfig::defaults();

        const auto session = synthesize_session(cfg);
        {
            auto out = open_out(dir / "synthetic_session.jsonl");
            write_session(out, session);
        }
        const auto result = replay(session, cfg);
        {
            auto out = open_out(dir / "golden_replay.jsonl");
            write_session(out, result.log);
        }
        {
            auto out = open_out(dir / "golden_trajectory.csv");
            write_trajectory(out, result.results, TrajectoryFormat::csv);
        }
        for (auto [format, name] : {std::pair{wire::Format::json, "wire_golden.json.txt"},
                                    std::pair{wire::Format::xml, "wire_golden.xml.txt"}}) {
            auto out = open_out(dir / name);
            for (const auto& m : messages::golden_corpus())
                out << wire::encode(m, format) << '\n';
        }
        std::cout << session.records.size() << " input records, " << result.results.size() << " results\n";
    } catch (const std::exception& e) {
        std::cerr << "make_golden: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
