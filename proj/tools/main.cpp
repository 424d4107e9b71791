#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "protoprune/trainer.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        const protoprune::CliResult cli = protoprune::parse_cli(args);
        if (cli.help_requested) {
            std::cout << cli.help_text;
            return 0;
        }
        const protoprune::RunResult result = protoprune::run(cli.config);
        std::cout << protoprune::summary_json(cli.config, result) << "\n";
        return 0;
    } catch (const protoprune::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const protoprune::ParseError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const protoprune::InconsistentIndicatorError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const protoprune::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 5;
    }
}
