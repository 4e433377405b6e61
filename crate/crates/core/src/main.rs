fn main() {
    let code = postmark::cli::run_with(std::env::args_os(), &mut std::io::stdout());
    std::process::exit(code);
}
