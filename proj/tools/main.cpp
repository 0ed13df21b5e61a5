#include "cfmimo/cli.hpp"

#include <string>
#include <vector>

extern char** environ;

int main(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    std::vector<std::pair<std::string, std::string>> env;
    for (char** e = environ; *e != nullptr; ++e) {
        const std::string entry(*e);
        const std::size_t eq = entry.find('=');
        if (eq != std::string::npos) {
            env.emplace_back(entry.substr(0, eq), entry.substr(eq + 1));
        }
    }
    return cfmimo::run_cli(args, env);
}
