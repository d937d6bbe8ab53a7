fn main() {
    let args: Vec<String> = std::env::args().collect();
    let outcome = iterforms::cli::run_command(&args);
    print!("{}", outcome.stdout);
    eprint!("{}", outcome.stderr);
    std::process::exit(outcome.code);
}
