fn main() -> std::process::ExitCode {
    bnls::cli::main()
}
