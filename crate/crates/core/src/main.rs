fn main() {
    std::process::exit(preorder::cli::run_subcommand(std::env::args_os()));
}
