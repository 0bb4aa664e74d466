fn main() -> std::process::ExitCode {
    curlfree::cli::main()
}
