fn main() {
    let code = bloch_discord::cli::run(std::env::args_os());
    std::process::exit(code);
}
