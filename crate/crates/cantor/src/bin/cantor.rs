//! The `cantor` command-line tool; see [`cantor::cli`] for the commands.

fn main() {
    std::process::exit(cantor::cli::run(std::env::args_os()));
}
