fn main() -> std::process::ExitCode {
    netrecon::cli::main_with(std::env::args_os())
}
