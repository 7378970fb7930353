use std::io;

fn main() {
    let stdin = io::stdin();
    let mut input = stdin.lock();
    let code = mediation::cli::run(std::env::args_os().collect(), &mut input, &mut io::stdout(), &mut io::stderr());
    std::process::exit(code);
}
