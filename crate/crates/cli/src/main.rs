fn main() {
    std::process::exit(oneres_cli::commands::main_with(std::env::args_os()));
}
