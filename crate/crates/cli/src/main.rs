fn main() {
    std::process::exit(lpevo_cli::run_command(std::env::args_os()));
}
